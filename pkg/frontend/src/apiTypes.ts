// Request/response shapes of the edit service, mirroring docs/api-schema.json.

export interface EditRequest {
  image: string; // base64 PNG
  style_text?: string;
  color_text?: string;
  style_ref?: string; // base64 PNG
  color_ref?: string; // base64 PNG
}

export interface LossTermJson {
  value: number;
  active: boolean;
  flags?: string[];
}

export interface BreakdownJson {
  losses: {
    terms: Record<string, LossTermJson>;
    text_total: number;
    image_total: number;
    preserve_total: number;
    total: number;
  } | null;
  metrics: Record<string, number | null>;
  warnings: string[];
}

export interface EditResponse {
  image: string; // base64 PNG
  edit_id: string;
  breakdown: BreakdownJson;
}

export interface InterpolateRequest {
  edit_id_a: string;
  edit_id_b: string;
  lambda: number;
}

export interface InterpolateResponse {
  image: string; // base64 PNG
}

export interface HealthResponse {
  status: string;
  checkpoint_hash: string;
}
