/** Payload shapes of the comparison-service HTTP API. */

export interface ModelSummary {
  model_id: string;
  display_name: string;
  param_count: number;
  overall_accuracy: number;
  per_root: (number | null)[];
}

export interface ModelsPayload {
  models: ModelSummary[];
  root_labels: string[];
}

export interface ProjectionPayload {
  model_id: string;
  seed: number;
  perplexity: number;
  class_ids: number[];
  coords: [number, number][];
  root_index: number[] | null;
  degenerate: boolean;
}

export interface AccuracyPayload {
  model_id: string;
  overall: number;
  per_root: (number | null)[];
  per_leaf: (number | null)[];
  leaf_counts: number[];
  leaf_correct: number[];
  display_name?: string;
  param_count?: number;
  class_labels: Record<string, string>;
}

export interface ClassStatEntry {
  class_id: number;
  range: number;
  mean: number;
  accuracies: Record<string, number>;
}

export interface ClassStatsPayload {
  diverging: ClassStatEntry[];
  coherent_top: ClassStatEntry[];
  coherent_bottom: ClassStatEntry[];
  class_labels: Record<string, string>;
}

export interface HierarchyPayload {
  leaf_labels: string[];
  root_of: number[];
  root_labels: string[];
}

export interface DatasetImage {
  image_ref: string;
  class_index: number;
}

export interface DatasetManifestPayload {
  root: string;
  dataset_digest: string;
  class_labels: Record<string, string>;
  images: DatasetImage[];
}

export type ExplanationMethod =
  | "grad_cam"
  | "bbmp"
  | "grad_cam_pp"
  | "smooth_grad_cam_pp"
  | "score_cam";

export type SimilarityMeasure = "l1" | "mse" | "ssim" | "hash";

export interface TaskSpec {
  model_ids: string[];
  class_ids: number[];
  method: ExplanationMethod;
  measure?: SimilarityMeasure;
  threshold?: number;
  image_ref?: string | null;
  target_class?: number | null;
  max_images_per_class?: number | null;
}

export interface TaskStatusPayload {
  task_id: string;
  status: "pending" | "running" | "done" | "failed";
  progress: number;
  row_count: number;
  total_rows: number;
  error: string | null;
  spec: TaskSpec;
}

export interface TaskRow {
  model_id: string;
  display_name: string;
  image_ref: string;
  ground_truth_class: number;
  ground_truth_label: string;
  predicted_class: number;
  predicted_label: string;
  correct: boolean;
  overall_accuracy: number;
  class_accuracy: number | null;
  confidence: number;
  target_class: number;
  attention_ref: string;
  overlay_ref: string;
  contour_ref: string;
  roi_ref: string;
  cih_ref: string | null;
}

export interface ResultsPayload {
  task_id: string;
  status: string;
  progress: number;
  total: number;
  page: number;
  page_size: number;
  rows: TaskRow[];
}

export interface SimilarityPayload {
  measure: SimilarityMeasure;
  labels: string[];
  values: number[][];
  heatmap_ref: string;
}

export interface CihPayload {
  bins: number[][];
  kept_pixels: number;
  threshold_used: number;
  empty_roi: boolean;
}

export interface ThresholdRowRefs {
  model_id: string;
  image_ref: string;
  attention_ref: string;
  overlay_ref: string;
  contour_ref: string;
  roi_ref: string;
  cih_ref: string | null;
}

export interface ThresholdPayload {
  task_id: string;
  threshold: number;
  rows: ThresholdRowRefs[];
}

export interface ApiError {
  code: string;
  message: string;
  detail: unknown;
}
