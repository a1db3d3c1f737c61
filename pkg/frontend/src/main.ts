/** Bootstraps the five coordinated views against the comparison service. */

import { ApiClient } from "./api";
import { ViewState } from "./state";
import type {
  AccuracyPayload,
  DatasetManifestPayload,
  ModelsPayload,
  TaskSpec,
} from "./types";
import {
  averageBars,
  classAccuracyPlots,
  leafAccuracyBars,
  modelScatter,
  projectionPoints,
  radarSeries,
  rangeBars,
  similarityCells,
  sortRows,
  tableRows,
} from "./viewmodels";
import { DistributionGraph } from "./views/distribution";
import { ExplanationView } from "./views/explanation";
import { LeafAccuracyBars, ModelScatterChart, RadarChart } from "./views/overall";
import { TaskSidebar } from "./views/sidebar";
import { SupplementalView } from "./views/supplemental";

const POLL_MS = 500;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing container #${id}`);
  return node;
}

export class App {
  readonly api = new ApiClient("");
  readonly state = new ViewState();

  private models: ModelsPayload = { models: [], root_labels: [] };
  private manifest: DatasetManifestPayload = {
    root: "", dataset_digest: "", class_labels: {}, images: [],
  };
  private hierarchyRootOf: number[] | null = null;
  private accuracyCache = new Map<string, AccuracyPayload>();
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  private scatter!: ModelScatterChart;
  private radar!: RadarChart;
  private modelBars!: LeafAccuracyBars;
  private rootBars!: LeafAccuracyBars;
  private distribution!: DistributionGraph;
  private sidebar!: TaskSidebar;
  private explanation!: ExplanationView;
  private supplemental!: SupplementalView;

  async start(): Promise<void> {
    this.scatter = new ModelScatterChart(el("model-scatter"), this.state);
    this.radar = new RadarChart(el("model-radar"), this.state);
    this.modelBars = new LeafAccuracyBars(el("model-bars"), "leaf accuracy — pinned model");
    this.rootBars = new LeafAccuracyBars(el("root-bars"), "leaf accuracy — pinned root");
    this.distribution = new DistributionGraph(el("distribution"), this.state);
    this.sidebar = new TaskSidebar(el("sidebar"), this.state, (spec) => void this.runTask(spec));
    this.explanation = new ExplanationView(
      el("explanation"),
      this.state,
      this.api,
      (t) => void this.pushThreshold(t),
      (column) => {
        const order =
          this.state.sort.column === column && this.state.sort.order === "desc" ? "asc" : "desc";
        this.state.setSort({ column, order });
      },
      (needle) => this.state.setFilter(needle),
    );
    this.supplemental = new SupplementalView(el("supplemental"));
    this.explanation.scaffold();
    this.supplemental.scaffold();

    [this.models, this.manifest] = await Promise.all([
      this.api.models(),
      this.api.datasetManifest(),
    ]);
    try {
      this.hierarchyRootOf = (await this.api.hierarchy()).root_of;
    } catch {
      this.hierarchyRootOf = null;
    }

    this.wireSubscriptions();
    this.renderOverview();
    void this.refreshStatBars();
    void this.refreshExamples();
    if (this.models.models.length) this.state.pinModel(this.models.models[0].model_id);
  }

  private wireSubscriptions(): void {
    this.state.subscribe("model_bars", () => void this.refreshModelBars());
    this.state.subscribe("root_bars", () => void this.refreshRootBars());
    this.state.subscribe("radar", () => this.renderRadar());
    this.state.subscribe("distribution", () => void this.refreshDistribution());
    this.state.subscribe("sidebar", () => this.renderSidebar());
    this.state.subscribe("supplemental_classes", () => void this.refreshClassPlots());
    this.state.subscribe("table", () => void this.refreshTable());
    this.state.subscribe("similarity", () => void this.refreshTaskExtras());
  }

  private renderOverview(): void {
    this.scatter.render(modelScatter(this.models));
    this.renderRadar();
    this.renderSidebar();
  }

  private renderRadar(): void {
    this.radar.render(
      radarSeries(this.models, this.state.hiddenRadarSeries),
      this.models.root_labels,
    );
  }

  private renderSidebar(): void {
    this.sidebar.render(this.models, this.manifest);
  }

  private async accuracy(modelId: string): Promise<AccuracyPayload> {
    const cached = this.accuracyCache.get(modelId);
    if (cached) return cached;
    const payload = await this.api.accuracy(modelId);
    this.accuracyCache.set(modelId, payload);
    return payload;
  }

  private async refreshModelBars(): Promise<void> {
    if (!this.state.pinnedModel) return;
    const gen = this.state.nextGeneration("model_bars");
    const acc = await this.accuracy(this.state.pinnedModel);
    if (!this.state.isCurrent("model_bars", gen)) return; // superseded
    this.modelBars.render(leafAccuracyBars(acc));
  }

  private async refreshRootBars(): Promise<void> {
    if (!this.state.pinnedModel || this.state.pinnedRootClass === null) return;
    const gen = this.state.nextGeneration("root_bars");
    const acc = await this.accuracy(this.state.pinnedModel);
    if (!this.state.isCurrent("root_bars", gen)) return;
    this.rootBars.render(
      leafAccuracyBars(acc, this.hierarchyRootOf, this.state.pinnedRootClass),
    );
  }

  private async refreshDistribution(): Promise<void> {
    if (!this.state.pinnedModel) return;
    const gen = this.state.nextGeneration("distribution");
    const projection = await this.api.projection(this.state.pinnedModel);
    if (!this.state.isCurrent("distribution", gen)) return;
    this.distribution.render(
      projectionPoints(projection, this.manifest.class_labels),
      this.state.pinnedModel,
      this.models.root_labels,
    );
  }

  private async refreshStatBars(): Promise<void> {
    try {
      const stats = await this.api.classStats();
      const avg = averageBars(stats);
      this.supplemental.renderStatBars(rangeBars(stats), avg.top, avg.bottom);
    } catch {
      this.supplemental.renderStatBars([], [], []);
    }
  }

  private async refreshExamples(): Promise<void> {
    try {
      const resp = await fetch("/examples");
      if (resp.ok) {
        const body = await resp.json();
        this.explanation.renderExamples(body.methods, body.image_ref);
      }
    } catch {
      /* examples are optional until precompute ran */
    }
  }

  private async refreshClassPlots(): Promise<void> {
    const gen = this.state.nextGeneration("class_plots");
    const accuracies = await Promise.all(
      this.models.models.map((m) => this.accuracy(m.model_id)),
    );
    if (!this.state.isCurrent("class_plots", gen)) return;
    this.supplemental.renderClassPlots(
      classAccuracyPlots(accuracies, this.state.selectedClasses, this.manifest.class_labels),
    );
  }

  private async runTask(spec: TaskSpec): Promise<void> {
    const taskId = await this.api.createTask(spec);
    this.state.setActiveTask(taskId);
    if (this.pollTimer) clearInterval(this.pollTimer);
    this.pollTimer = setInterval(() => void this.pollTask(taskId), POLL_MS);
  }

  private async pollTask(taskId: string): Promise<void> {
    const status = await this.api.taskStatus(taskId);
    await this.refreshTable();
    if (status.status === "done" || status.status === "failed") {
      if (this.pollTimer) clearInterval(this.pollTimer);
      this.pollTimer = null;
      await this.refreshTaskExtras();
    }
  }

  private async refreshTable(): Promise<void> {
    const taskId = this.state.activeTaskId;
    if (!taskId) return;
    const gen = this.state.nextGeneration("table");
    const payload = await this.api.taskResults(taskId, {
      sort_by: this.state.sort.column ?? undefined,
      order: this.state.sort.order,
      filter: this.state.filter || undefined,
      page_size: 100,
    });
    if (!this.state.isCurrent("table", gen)) return; // stale response
    const status = await this.api.taskStatus(taskId);
    const single = status.spec.model_ids.length === 1;
    const rows = sortRows(payload.rows, this.state.sort.column, this.state.sort.order);
    this.explanation.renderTable(
      tableRows({ ...payload, rows }, (t) => this.api.artifactUrl(t), (r) => this.api.imageUrl(r)),
      single,
      `task ${taskId}: ${status.status} (${Math.round(status.progress * 100)}%)`,
    );
  }

  private async refreshTaskExtras(): Promise<void> {
    const taskId = this.state.activeTaskId;
    if (!taskId) return;
    const status = await this.api.taskStatus(taskId);
    const imageUrl = status.spec.image_ref ? this.api.imageUrl(status.spec.image_ref) : null;
    if (status.spec.model_ids.length > 1 && status.spec.image_ref && status.status === "done") {
      const sim = await this.api.similarity(taskId, this.state.measure);
      this.supplemental.renderTaskExtras(imageUrl, similarityCells(sim), sim.labels, sim.measure);
    } else {
      this.supplemental.renderTaskExtras(imageUrl, [], [], "");
    }
  }

  private async pushThreshold(t: number): Promise<void> {
    const taskId = this.state.activeTaskId;
    if (!taskId) return;
    await this.api.setThreshold(taskId, t); // re-renders contours only
    await this.refreshTable();
  }
}

if (typeof document !== "undefined" && document.getElementById("model-scatter")) {
  void new App().start();
}
