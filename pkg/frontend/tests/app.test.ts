import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { buildApp, dataUrl } from "../src/app.js";
import { deterministicImage, fnv1aOfBytes, makeMockService, type MockService } from "./mockService.js";

function setFiles(input: HTMLInputElement, files: File[]) {
  Object.defineProperty(input, "files", { value: files, configurable: true });
  input.dispatchEvent(new Event("change"));
}

function typeInto(input: HTMLInputElement, text: string) {
  input.value = text;
  input.dispatchEvent(new Event("input"));
}

function b64FromSrc(src: string): string {
  const comma = src.indexOf(",");
  return src.slice(comma + 1);
}

const FACE_BYTES = "fake-png-bytes-for-tests";

describe("console app", () => {
  let service: MockService;
  let root: HTMLElement;
  let get: (id: string) => HTMLElement;

  beforeEach(() => {
    service = makeMockService();
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app")!;
    buildApp(root, new ApiClient("", service.fetch));
    get = (id) => {
      const node = root.querySelector(`#${id}`);
      if (!node) throw new Error(`missing #${id}`);
      return node as HTMLElement;
    };
  });

  async function submitStyleText(prompt: string) {
    const before = root.querySelectorAll("#history li").length;
    setFiles(get("image-file") as HTMLInputElement, [new File([FACE_BYTES], "face.png", { type: "image/png" })]);
    typeInto(get("style-text") as HTMLInputElement, prompt);
    await vi.waitFor(() => expect((get("submit") as HTMLButtonElement).disabled).toBe(false));
    get("submit").click();
    await vi.waitFor(() => expect(root.querySelectorAll("#history li").length).toBe(before + 1));
  }

  it("disables submit until an image and a condition are present", async () => {
    const submit = get("submit") as HTMLButtonElement;
    expect(submit.disabled).toBe(true);
    setFiles(get("image-file") as HTMLInputElement, [new File([FACE_BYTES], "face.png", { type: "image/png" })]);
    expect(submit.disabled).toBe(true);
    typeInto(get("style-text") as HTMLInputElement, "bobcut hairstyle");
    expect(submit.disabled).toBe(false);
    typeInto(get("style-text") as HTMLInputElement, "   ");
    expect(submit.disabled).toBe(true);
  });

  it("renders the service's returned image unmodified (pixel-hash match)", async () => {
    await submitStyleText("bobcut hairstyle");
    const rendered = b64FromSrc((get("result") as HTMLImageElement).src);

    // Direct API call with the same payload, independent of the DOM path.
    const direct = new ApiClient("", service.fetch);
    const reader = new FileReader();
    const fileB64: string = await new Promise((resolve) => {
      reader.onload = () => resolve(String(reader.result).split(",")[1]!);
      reader.readAsDataURL(new File([FACE_BYTES], "face.png", { type: "image/png" }));
    });
    const response = await direct.edit({ image: fileB64, style_text: "bobcut hairstyle" });

    expect(fnv1aOfBytes(rendered)).toBe(fnv1aOfBytes(response.image));
    expect(rendered).toBe(response.image);
  });

  it("stores edits in the session history", async () => {
    await submitStyleText("bobcut hairstyle");
    await submitStyleText("mohawk hairstyle");
    const entries = root.querySelectorAll("#history li");
    expect(entries.length).toBe(2);
  });

  it("re-running a history entry reports the identical image", async () => {
    await submitStyleText("bobcut hairstyle");
    (root.querySelector("#history .rerun") as HTMLButtonElement).click();
    await vi.waitFor(() => expect(get("result-meta").textContent).toContain("identical to history"));
  });

  it("slider endpoints reproduce the stored edit images", async () => {
    await submitStyleText("bobcut hairstyle");
    const firstImage = b64FromSrc((get("result") as HTMLImageElement).src);
    await submitStyleText("mohawk hairstyle");
    const secondImage = b64FromSrc((get("result") as HTMLImageElement).src);

    const slider = get("slider") as HTMLInputElement;
    await vi.waitFor(() => expect(slider.disabled).toBe(false));

    slider.value = "0";
    slider.dispatchEvent(new Event("input"));
    await vi.waitFor(() => expect((get("frame") as HTMLImageElement).src).toBe(dataUrl(firstImage)));

    slider.value = "100";
    slider.dispatchEvent(new Event("input"));
    await vi.waitFor(() => expect((get("frame") as HTMLImageElement).src).toBe(dataUrl(secondImage)));
  });

  it("mid-slider positions request a blended frame from the service", async () => {
    await submitStyleText("bobcut hairstyle");
    await submitStyleText("mohawk hairstyle");
    const slider = get("slider") as HTMLInputElement;
    slider.value = "50";
    slider.dispatchEvent(new Event("input"));
    await vi.waitFor(() => expect(service.interpolateCalls).toBeGreaterThan(0));
    await vi.waitFor(() => {
      const src = (get("frame") as HTMLImageElement).src;
      expect(b64FromSrc(src)).toContain(btoa("blend-").slice(0, 6));
    });
  });

  it("surfaces 400 responses as inline errors without blanking the last result", async () => {
    await submitStyleText("bobcut hairstyle");
    const goodSrc = (get("result") as HTMLImageElement).src;

    service.failNextWith = { status: 400, body: JSON.stringify({ detail: "bad payload" }) };
    get("submit").click();
    await vi.waitFor(() => expect(get("error").textContent).toContain("bad payload"));
    expect(get("error").classList.contains("hidden")).toBe(false);
    expect((get("result") as HTMLImageElement).src).toBe(goodSrc);
  });

  it("surfaces 503 and malformed bodies as inline errors", async () => {
    setFiles(get("image-file") as HTMLInputElement, [new File([FACE_BYTES], "face.png", { type: "image/png" })]);
    typeInto(get("style-text") as HTMLInputElement, "afro hairstyle");

    service.healthy = false;
    get("submit").click();
    await vi.waitFor(() => expect(get("error").textContent).toContain("checkpoint not loaded"));

    service.healthy = true;
    service.failNextWith = { status: 200, body: "<html>oops</html>" };
    get("submit").click();
    await vi.waitFor(() => expect(get("error").textContent).toContain("malformed JSON"));
  });

  it("shows the checkpoint hash from /health", async () => {
    await vi.waitFor(() => expect(get("status").textContent).toContain("cafebabe"));
  });
});
