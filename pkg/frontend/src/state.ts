/** Shared view state and the coordinated-update contract.
 *
 * Each mutation names the field that changed; subscribers registered for the
 * views that depend on that field are re-rendered. Stale async responses are
 * discarded through per-scope generation counters.
 */

import type { ExplanationMethod, SimilarityMeasure } from "./types";

export const MAX_SELECTED_MODELS = 13;

export type StateField =
  | "pinned_model"
  | "pinned_root_class"
  | "selected_models"
  | "selected_classes"
  | "selected_image"
  | "method"
  | "measure"
  | "threshold"
  | "sort"
  | "filter"
  | "active_task"
  | "radar_legend";

export type ViewTarget =
  | "model_bars"
  | "root_bars"
  | "radar"
  | "sidebar"
  | "supplemental_classes"
  | "table"
  | "similarity"
  | "threshold_refs"
  | "distribution";

/** Which views must refresh when a field changes. */
export function dependentsOf(field: StateField): ViewTarget[] {
  switch (field) {
    case "pinned_model":
      // pinning a model re-ranks its leaf-accuracy bars and its distribution
      return ["model_bars", "root_bars", "distribution", "sidebar"];
    case "pinned_root_class":
      return ["root_bars", "sidebar"];
    case "selected_models":
      return ["sidebar", "radar"];
    case "selected_classes":
      return ["sidebar", "supplemental_classes"];
    case "selected_image":
      return ["sidebar"];
    case "method":
    case "measure":
      return ["sidebar"];
    case "threshold":
      return ["threshold_refs"];
    case "sort":
    case "filter":
      return ["table"];
    case "active_task":
      return ["table", "similarity", "sidebar"];
    case "radar_legend":
      return ["radar"];
  }
}

export interface SortSpec {
  column: "class_accuracy" | "confidence" | "overall_accuracy" | null;
  order: "asc" | "desc";
}

export interface ToggleResult {
  ok: boolean;
  message: string | null;
}

type Listener = () => void;

export class ViewState {
  pinnedModel: string | null = null;
  pinnedRootClass: number | null = null;
  selectedModels: string[] = [];
  selectedClasses: number[] = [];
  selectedImage: string | null = null;
  method: ExplanationMethod = "grad_cam";
  measure: SimilarityMeasure = "l1";
  threshold = 0.5;
  sort: SortSpec = { column: null, order: "desc" };
  filter = "";
  activeTaskId: string | null = null;
  /** Radar series hidden via the legend; never mutates selectedModels. */
  hiddenRadarSeries = new Set<string>();
  validationMessage: string | null = null;

  private listeners = new Map<ViewTarget, Set<Listener>>();
  private generations = new Map<string, number>();

  subscribe(target: ViewTarget, listener: Listener): () => void {
    if (!this.listeners.has(target)) this.listeners.set(target, new Set());
    this.listeners.get(target)!.add(listener);
    return () => this.listeners.get(target)?.delete(listener);
  }

  /** Coordinated update: notify every view depending on the changed field. */
  notify(field: StateField): void {
    for (const target of dependentsOf(field)) {
      for (const listener of this.listeners.get(target) ?? []) listener();
    }
  }

  pinModel(modelId: string): void {
    this.pinnedModel = modelId;
    this.notify("pinned_model");
  }

  pinRootClass(root: number): void {
    this.pinnedRootClass = root;
    this.notify("pinned_root_class");
  }

  /** Add or remove a model from the task selection, enforcing the limit. */
  toggleModel(modelId: string): ToggleResult {
    const idx = this.selectedModels.indexOf(modelId);
    if (idx >= 0) {
      this.selectedModels = this.selectedModels.filter((m) => m !== modelId);
      this.validationMessage = null;
      this.notify("selected_models");
      return { ok: true, message: null };
    }
    if (this.selectedModels.length >= MAX_SELECTED_MODELS) {
      this.validationMessage = `Select at most ${MAX_SELECTED_MODELS} models for comparison`;
      this.notify("selected_models");
      return { ok: false, message: this.validationMessage };
    }
    this.selectedModels = [...this.selectedModels, modelId];
    this.validationMessage = null;
    this.notify("selected_models");
    return { ok: true, message: null };
  }

  toggleClass(classId: number): void {
    const idx = this.selectedClasses.indexOf(classId);
    this.selectedClasses =
      idx >= 0
        ? this.selectedClasses.filter((c) => c !== classId)
        : [...this.selectedClasses, classId];
    this.notify("selected_classes");
  }

  /** Legend click: hide/show a radar series without touching the selection. */
  toggleRadarSeries(modelId: string): void {
    if (this.hiddenRadarSeries.has(modelId)) this.hiddenRadarSeries.delete(modelId);
    else this.hiddenRadarSeries.add(modelId);
    this.notify("radar_legend");
  }

  setMethod(method: ExplanationMethod): void {
    this.method = method;
    this.notify("method");
  }

  setMeasure(measure: SimilarityMeasure): void {
    this.measure = measure;
    this.notify("measure");
  }

  setThreshold(t: number): void {
    this.threshold = t;
    this.notify("threshold");
  }

  setSort(sort: SortSpec): void {
    this.sort = sort;
    this.notify("sort");
  }

  setFilter(filter: string): void {
    this.filter = filter;
    this.notify("filter");
  }

  setSelectedImage(imageRef: string | null): void {
    this.selectedImage = imageRef;
    this.notify("selected_image");
  }

  setActiveTask(taskId: string | null): void {
    this.activeTaskId = taskId;
    this.notify("active_task");
  }

  /** Bump and return the generation for an async scope (one per view). */
  nextGeneration(scope: string): number {
    const gen = (this.generations.get(scope) ?? 0) + 1;
    this.generations.set(scope, gen);
    return gen;
  }

  /** A response is stale when a newer request for the scope was issued. */
  isCurrent(scope: string, generation: number): boolean {
    return this.generations.get(scope) === generation;
  }
}
