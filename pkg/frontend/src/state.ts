// Session history of edits: the request that produced each edit plus the
// returned image, so any entry can be re-submitted and checked for identity.

import type { EditRequest, EditResponse } from "./apiTypes.js";

export interface HistoryEntry {
  label: string;
  request: EditRequest;
  editId: string;
  imageB64: string;
}

export class SessionHistory {
  private entries: HistoryEntry[] = [];
  private listeners: Array<() => void> = [];

  add(request: EditRequest, response: EditResponse): HistoryEntry {
    const parts: string[] = [];
    if (request.style_text) parts.push(`style: ${request.style_text}`);
    if (request.style_ref) parts.push("style: reference");
    if (request.color_text) parts.push(`color: ${request.color_text}`);
    if (request.color_ref) parts.push("color: reference");
    const entry: HistoryEntry = {
      label: `#${this.entries.length + 1} ${parts.join(", ")}`,
      request,
      editId: response.edit_id,
      imageB64: response.image,
    };
    this.entries.push(entry);
    this.notify();
    return entry;
  }

  all(): readonly HistoryEntry[] {
    return this.entries;
  }

  byEditId(editId: string): HistoryEntry | undefined {
    return this.entries.find((e) => e.editId === editId);
  }

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }
}

export function conditionCount(request: EditRequest): number {
  let n = 0;
  if (request.style_text) n += 1;
  else if (request.style_ref) n += 1;
  if (request.color_text) n += 1;
  else if (request.color_ref) n += 1;
  return n;
}
