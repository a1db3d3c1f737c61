/** Pure payload-to-view-model mappers.
 *
 * No arithmetic happens here beyond ordering and string formatting: every
 * value a chart or table displays is a field of an API payload, passed
 * through unchanged. Snapshot tests pin that correspondence.
 */

import {
  classDisplay,
  formatAccuracy,
  formatConfidence,
  formatParamCount,
  formatSimilarity,
} from "./format";
import type {
  AccuracyPayload,
  ClassStatEntry,
  ClassStatsPayload,
  ModelsPayload,
  ProjectionPayload,
  ResultsPayload,
  SimilarityPayload,
  TaskRow,
} from "./types";

/** Categorical palette for the 8 root groups, shared by (A2), (B) and (E). */
export const ROOT_PALETTE = [
  "#4e79a7", "#f28e2b", "#59a14f", "#e15759",
  "#b07aa1", "#76b7b2", "#edc948", "#9c755f",
];

export function rootColor(rootIndex: number): string {
  return ROOT_PALETTE[rootIndex % ROOT_PALETTE.length];
}

// --- (A1) complexity vs accuracy scatter ----------------------------------

export interface ModelPoint {
  modelId: string;
  label: string;
  x: number; // param_count
  y: number; // overall_accuracy
  display: { params: string; accuracy: string };
}

export function modelScatter(payload: ModelsPayload): ModelPoint[] {
  return payload.models.map((m) => ({
    modelId: m.model_id,
    label: m.display_name,
    x: m.param_count,
    y: m.overall_accuracy,
    display: {
      params: formatParamCount(m.param_count),
      accuracy: formatAccuracy(m.overall_accuracy),
    },
  }));
}

// --- (A2) per-root radar ----------------------------------------------------

export interface RadarSeries {
  modelId: string;
  label: string;
  hidden: boolean;
  values: { axis: string; value: number | null; display: string }[];
}

export function radarSeries(payload: ModelsPayload, hidden: Set<string>): RadarSeries[] {
  return payload.models.map((m) => ({
    modelId: m.model_id,
    label: m.display_name,
    hidden: hidden.has(m.model_id),
    values: payload.root_labels.map((axis, i) => ({
      axis,
      value: m.per_root[i],
      display: formatAccuracy(m.per_root[i]),
    })),
  }));
}

// --- (A3)/(A4) leaf accuracy bars -------------------------------------------

export interface LeafBar {
  classId: number;
  label: string;
  value: number;
  display: string;
}

/** Leaf accuracies of one model, ranked in descending order of accuracy.
 * With a pinned root (and the hierarchy's root_of) only member leaves show. */
export function leafAccuracyBars(
  accuracy: AccuracyPayload,
  rootOf: number[] | null = null,
  pinnedRoot: number | null = null,
): LeafBar[] {
  const bars: LeafBar[] = [];
  accuracy.per_leaf.forEach((value, classId) => {
    if (value === null) return;
    if (pinnedRoot !== null && rootOf !== null && rootOf[classId] !== pinnedRoot) return;
    bars.push({
      classId,
      label: classDisplay(classId, accuracy.class_labels[String(classId)]),
      value,
      display: formatAccuracy(value),
    });
  });
  bars.sort((a, b) => b.value - a.value || a.classId - b.classId);
  return bars;
}

// --- (B) distribution graph --------------------------------------------------

export interface ProjectionPoint {
  classId: number;
  label: string;
  x: number;
  y: number;
  root: number;
  color: string;
}

export function projectionPoints(
  payload: ProjectionPayload,
  classLabels: Record<string, string>,
): ProjectionPoint[] {
  return payload.class_ids.map((classId, i) => {
    const root = payload.root_index ? payload.root_index[i] : 0;
    return {
      classId,
      label: classDisplay(classId, classLabels[String(classId)]),
      x: payload.coords[i][0],
      y: payload.coords[i][1],
      root,
      color: rootColor(root),
    };
  });
}

// --- (E) range / average bar charts ------------------------------------------

export interface ClassStatBar {
  classId: number;
  label: string;
  value: number;
  display: string;
  perModel: { modelId: string; value: number; display: string }[];
}

function statBar(entry: ClassStatEntry, labels: Record<string, string>, field: "range" | "mean"): ClassStatBar {
  return {
    classId: entry.class_id,
    label: classDisplay(entry.class_id, labels[String(entry.class_id)]),
    value: entry[field],
    display: formatAccuracy(entry[field]),
    perModel: Object.entries(entry.accuracies).map(([modelId, value]) => ({
      modelId,
      value,
      display: formatAccuracy(value),
    })),
  };
}

export function rangeBars(stats: ClassStatsPayload): ClassStatBar[] {
  return stats.diverging.map((e) => statBar(e, stats.class_labels, "range"));
}

export function averageBars(stats: ClassStatsPayload): { top: ClassStatBar[]; bottom: ClassStatBar[] } {
  return {
    top: stats.coherent_top.map((e) => statBar(e, stats.class_labels, "mean")),
    bottom: stats.coherent_bottom.map((e) => statBar(e, stats.class_labels, "mean")),
  };
}

// --- (E) per-class accuracy scatterplots --------------------------------------

export interface ClassAccuracyDot {
  modelId: string;
  value: number;
  display: string;
}

export interface ClassAccuracyPlot {
  classId: number;
  label: string;
  dots: ClassAccuracyDot[];
}

/** One scatterplot per selected class: each model's accuracy on that class. */
export function classAccuracyPlots(
  accuracies: AccuracyPayload[],
  selectedClasses: number[],
  classLabels: Record<string, string>,
): ClassAccuracyPlot[] {
  return selectedClasses.map((classId) => ({
    classId,
    label: classDisplay(classId, classLabels[String(classId)]),
    dots: accuracies
      .filter((a) => a.per_leaf[classId] !== null && a.per_leaf[classId] !== undefined)
      .map((a) => ({
        modelId: a.model_id,
        value: a.per_leaf[classId] as number,
        display: formatAccuracy(a.per_leaf[classId]),
      })),
  }));
}

// --- (D) results table ----------------------------------------------------------

export interface TableRowVm {
  modelId: string;
  modelLabel: string;
  imageRef: string;
  groundTruth: string;
  predicted: string;
  correct: boolean;
  overallAccuracy: string;
  classAccuracy: string;
  confidence: string;
  imageUrl: string;
  overlayUrl: string;
  roiUrl: string;
  contourToken: string;
  cihToken: string | null;
}

export function tableRows(
  payload: ResultsPayload,
  artifactUrl: (token: string) => string,
  imageUrl: (ref: string) => string,
): TableRowVm[] {
  return payload.rows.map((row: TaskRow) => ({
    modelId: row.model_id,
    modelLabel: row.display_name,
    imageRef: row.image_ref,
    groundTruth: classDisplay(row.ground_truth_class, row.ground_truth_label),
    predicted: classDisplay(row.predicted_class, row.predicted_label),
    correct: row.correct,
    overallAccuracy: formatAccuracy(row.overall_accuracy),
    classAccuracy: formatAccuracy(row.class_accuracy),
    confidence: formatConfidence(row.confidence),
    imageUrl: imageUrl(row.image_ref),
    overlayUrl: artifactUrl(row.overlay_ref),
    roiUrl: artifactUrl(row.roi_ref),
    contourToken: row.contour_ref,
    cihToken: row.cih_ref,
  }));
}

/** Stable local sort mirroring the service contract: chosen column in the
 * requested order, ties (and the unsorted state) by (model_id, image_ref). */
export function sortRows(
  rows: TaskRow[],
  column: "class_accuracy" | "confidence" | "overall_accuracy" | null,
  order: "asc" | "desc",
): TaskRow[] {
  const byIdentity = (a: TaskRow, b: TaskRow) =>
    a.model_id < b.model_id ? -1 : a.model_id > b.model_id ? 1 :
    a.image_ref < b.image_ref ? -1 : a.image_ref > b.image_ref ? 1 : 0;
  const sorted = [...rows].sort(byIdentity);
  if (column === null) return sorted;
  const sign = order === "desc" ? -1 : 1;
  return sorted.sort((a, b) => {
    const va = a[column];
    const vb = b[column];
    if (va === null && vb === null) return 0; // keep identity order
    if (va === null) return 1; // missing values sink regardless of direction
    if (vb === null) return -1;
    if (va === vb) return 0;
    return va < vb ? -sign : sign;
  });
}

// --- (E) similarity heatmap --------------------------------------------------

export interface SimilarityCell {
  row: string;
  col: string;
  value: number;
  display: string;
}

export function similarityCells(payload: SimilarityPayload): SimilarityCell[] {
  const cells: SimilarityCell[] = [];
  payload.labels.forEach((row, i) => {
    payload.labels.forEach((col, j) => {
      cells.push({
        row,
        col,
        value: payload.values[i][j],
        display: formatSimilarity(payload.values[i][j]),
      });
    });
  });
  return cells;
}

// --- task spec validation ------------------------------------------------------

export interface TaskValidation {
  ok: boolean;
  problems: string[];
}

export function validateTaskSelection(
  selectedModels: string[],
  selectedClasses: number[],
  maxModels: number,
): TaskValidation {
  const problems: string[] = [];
  if (selectedModels.length === 0) problems.push("Select at least one model");
  if (selectedModels.length > maxModels)
    problems.push(`Select at most ${maxModels} models for comparison`);
  if (selectedClasses.length === 0) problems.push("Select at least one class");
  if (selectedModels.length > 1 && selectedClasses.length !== 1)
    problems.push("Multi-model comparison fixes exactly one class");
  return { ok: problems.length === 0, problems };
}
