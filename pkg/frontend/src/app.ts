// DOM wiring for the editing console. Pure client of the HTTP API: no model
// math happens here.

import { ApiClient, ApiError } from "./api.js";
import type { EditRequest } from "./apiTypes.js";
import { SessionHistory, conditionCount } from "./state.js";
import { latestWins } from "./throttle.js";

export const SLIDER_MIN_INTERVAL_MS = 100; // at most 10 interpolation calls per second

export function fileToBase64(file: File): Promise<string> {
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onerror = () => reject(new Error(`cannot read ${file.name}`));
    reader.onload = () => {
      const url = String(reader.result);
      const comma = url.indexOf(",");
      resolve(comma >= 0 ? url.slice(comma + 1) : url);
    };
    reader.readAsDataURL(file);
  });
}

export function dataUrl(b64: string): string {
  return `data:image/png;base64,${b64}`;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

export interface App {
  root: HTMLElement;
  history: SessionHistory;
  refresh: () => void;
}

export function buildApp(root: HTMLElement, client: ApiClient): App {
  const history = new SessionHistory();

  const error = el("div", { id: "error", role: "alert", class: "error hidden" });
  const status = el("div", { id: "status", class: "status" }, "connecting ...");

  // --- edit panel ---------------------------------------------------------
  const imageFile = el("input", { id: "image-file", type: "file", accept: "image/png,image/jpeg" });
  const styleText = el("input", { id: "style-text", type: "text", placeholder: "e.g. bobcut hairstyle" });
  const colorText = el("input", { id: "color-text", type: "text", placeholder: "e.g. green hair" });
  const styleRef = el("input", { id: "style-ref", type: "file", accept: "image/png,image/jpeg" });
  const colorRef = el("input", { id: "color-ref", type: "file", accept: "image/png,image/jpeg" });
  const submit = el("button", { id: "submit", disabled: "" }, "Edit");
  const resultImg = el("img", { id: "result", alt: "edited result", class: "frame hidden" });
  const resultMeta = el("div", { id: "result-meta", class: "meta" });

  // --- history + interpolation panel --------------------------------------
  const historyList = el("ul", { id: "history" });
  const selectA = el("select", { id: "select-a" });
  const selectB = el("select", { id: "select-b" });
  const slider = el("input", { id: "slider", type: "range", min: "0", max: "100", value: "0", disabled: "" });
  const sliderValue = el("span", { id: "slider-value" }, "0.00");
  const frameImg = el("img", { id: "frame", alt: "interpolated frame", class: "frame hidden" });

  const showError = (message: string) => {
    error.textContent = message;
    error.classList.remove("hidden");
  };
  const clearError = () => {
    error.textContent = "";
    error.classList.add("hidden");
  };

  const currentRequest = async (): Promise<EditRequest | null> => {
    const source = imageFile.files?.[0];
    if (!source) return null;
    const request: EditRequest = { image: await fileToBase64(source) };
    if (styleText.value.trim()) request.style_text = styleText.value.trim();
    else if (styleRef.files?.[0]) request.style_ref = await fileToBase64(styleRef.files[0]);
    if (colorText.value.trim()) request.color_text = colorText.value.trim();
    else if (colorRef.files?.[0]) request.color_ref = await fileToBase64(colorRef.files[0]);
    return request;
  };

  const refreshSubmit = () => {
    const hasImage = Boolean(imageFile.files?.[0]);
    const hasCondition =
      Boolean(styleText.value.trim()) ||
      Boolean(colorText.value.trim()) ||
      Boolean(styleRef.files?.[0]) ||
      Boolean(colorRef.files?.[0]);
    submit.disabled = !(hasImage && hasCondition);
  };
  for (const input of [imageFile, styleText, colorText, styleRef, colorRef]) {
    input.addEventListener("input", refreshSubmit);
    input.addEventListener("change", refreshSubmit);
  }

  const runEdit = async (request: EditRequest, note?: string) => {
    try {
      const response = await client.edit(request);
      clearError();
      resultImg.src = dataUrl(response.image);
      resultImg.classList.remove("hidden");
      const warnings = response.breakdown?.warnings ?? [];
      resultMeta.textContent = [`edit ${response.edit_id}`, note, ...warnings].filter(Boolean).join(" | ");
      history.add(request, response);
      return response;
    } catch (err) {
      showError(err instanceof ApiError ? err.message : `unexpected failure: ${String(err)}`);
      return null;
    }
  };

  submit.addEventListener("click", async (event) => {
    event.preventDefault();
    const request = await currentRequest();
    if (!request) {
      showError("choose an input image first");
      return;
    }
    if (conditionCount(request) === 0) {
      showError("provide at least one hairstyle or color condition");
      return;
    }
    await runEdit(request);
  });

  // --- history rendering ---------------------------------------------------
  const renderHistory = () => {
    historyList.textContent = "";
    for (const entry of history.all()) {
      const item = el("li", {});
      const thumb = el("img", { class: "thumb", alt: entry.label });
      thumb.src = dataUrl(entry.imageB64);
      const label = el("span", {}, entry.label);
      const rerun = el("button", { class: "rerun" }, "re-run");
      rerun.addEventListener("click", async () => {
        const response = await runEdit(entry.request, undefined);
        if (response) {
          const identical = response.image === entry.imageB64;
          resultMeta.textContent += identical ? " | identical to history" : " | DIFFERS from history";
        }
      });
      item.append(thumb, label, rerun);
      historyList.append(item);
    }
    const options = history
      .all()
      .map((entry) => ({ value: entry.editId, label: entry.label }));
    for (const select of [selectA, selectB]) {
      const previous = select.value;
      select.textContent = "";
      for (const option of options) {
        select.append(el("option", { value: option.value }, option.label));
      }
      if (options.some((o) => o.value === previous)) select.value = previous;
    }
    if (options.length >= 2) {
      slider.disabled = false;
      if (selectA.value === selectB.value && options.length >= 2) {
        selectA.value = options[0]!.value;
        selectB.value = options[1]!.value;
      }
    }
  };
  history.onChange(renderHistory);

  // --- interpolation slider ------------------------------------------------
  const issueInterpolation = latestWins<number>((lambda, isCurrent) => {
    const a = selectA.value;
    const b = selectB.value;
    if (!a || !b) return;
    if (lambda === 0 || lambda === 1) {
      // Endpoints are the stored edits; the service returns those exact bytes.
      const entry = history.byEditId(lambda === 0 ? a : b);
      if (entry) {
        frameImg.src = dataUrl(entry.imageB64);
        frameImg.classList.remove("hidden");
        clearError();
        return;
      }
    }
    client
      .interpolate({ edit_id_a: a, edit_id_b: b, lambda })
      .then((response) => {
        if (!isCurrent()) return; // a newer slider position superseded this request
        clearError();
        frameImg.src = dataUrl(response.image);
        frameImg.classList.remove("hidden");
      })
      .catch((err) => {
        if (!isCurrent()) return;
        if (err instanceof ApiError && err.status === 404) {
          showError("edit expired from the service cache; re-run it from the history");
        } else {
          showError(err instanceof ApiError ? err.message : String(err));
        }
      });
  }, SLIDER_MIN_INTERVAL_MS);

  slider.addEventListener("input", () => {
    const lambda = Number(slider.value) / 100;
    sliderValue.textContent = lambda.toFixed(2);
    issueInterpolation(lambda);
  });

  // --- layout ---------------------------------------------------------------
  const editPanel = el("section", { class: "panel" });
  editPanel.append(
    el("h2", {}, "Edit"),
    labeled("Input image", imageFile),
    labeled("Hairstyle text", styleText),
    labeled("Hairstyle reference", styleRef),
    labeled("Hair color text", colorText),
    labeled("Hair color reference", colorRef),
    submit,
    resultImg,
    resultMeta,
  );

  const interpPanel = el("section", { class: "panel" });
  interpPanel.append(
    el("h2", {}, "Blend two edits"),
    labeled("Edit A", selectA),
    labeled("Edit B", selectB),
    labeled("Blend", slider),
    sliderValue,
    frameImg,
  );

  const historyPanel = el("section", { class: "panel" });
  historyPanel.append(el("h2", {}, "History"), historyList);

  root.append(el("h1", {}, "hairedit console"), status, error, editPanel, interpPanel, historyPanel);

  client
    .health()
    .then((h) => {
      status.textContent = `service ready | checkpoint ${h.checkpoint_hash}`;
    })
    .catch((err) => {
      status.textContent = "service unavailable";
      showError(err instanceof ApiError ? err.message : String(err));
    });

  return { root, history, refresh: renderHistory };
}

function labeled(text: string, control: HTMLElement): HTMLElement {
  const wrapper = el("label", { class: "field" });
  wrapper.append(el("span", {}, text), control);
  return wrapper;
}
