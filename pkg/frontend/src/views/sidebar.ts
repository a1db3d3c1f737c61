/** (C) Task Selection Sidebar: models, classes, image, method, measure,
 * threshold, and the run button, with visible validation. */

import * as d3 from "d3";

import type { ViewState } from "../state";
import type {
  DatasetManifestPayload,
  ExplanationMethod,
  ModelsPayload,
  SimilarityMeasure,
  TaskSpec,
} from "../types";
import { validateTaskSelection, type TaskValidation } from "../viewmodels";
import { MAX_SELECTED_MODELS } from "../state";

const METHODS: ExplanationMethod[] = [
  "grad_cam", "bbmp", "grad_cam_pp", "smooth_grad_cam_pp", "score_cam",
];
const MEASURES: SimilarityMeasure[] = ["l1", "mse", "ssim", "hash"];

export class TaskSidebar {
  constructor(
    private readonly root: HTMLElement,
    private readonly state: ViewState,
    private readonly onRun: (spec: TaskSpec) => void,
  ) {}

  validation(): TaskValidation {
    return validateTaskSelection(
      this.state.selectedModels,
      this.state.selectedClasses,
      MAX_SELECTED_MODELS,
    );
  }

  buildSpec(): TaskSpec {
    return {
      model_ids: [...this.state.selectedModels],
      class_ids: [...this.state.selectedClasses],
      method: this.state.method,
      measure: this.state.measure,
      threshold: this.state.threshold,
      image_ref: this.state.selectedModels.length > 1 ? this.state.selectedImage : null,
    };
  }

  render(models: ModelsPayload, manifest: DatasetManifestPayload): void {
    const sel = d3.select(this.root);
    sel.selectAll("*").remove();
    sel.append("div").attr("class", "chart-title").text("task selection");

    const modelBox = sel.append("div").attr("class", "control-group");
    modelBox.append("div").text("models");
    const labels = modelBox.selectAll("label")
      .data(models.models)
      .join("label")
      .style("display", "block");
    labels.append("input")
      .attr("type", "checkbox")
      .property("checked", (m) => this.state.selectedModels.includes(m.model_id))
      .on("change", (_event, m) => {
        this.state.toggleModel(m.model_id);
        this.refreshMessages();
      });
    labels.append("span").text((m) => ` ${m.display_name}`);

    const classBox = sel.append("div").attr("class", "control-group");
    classBox.append("div").text("classes");
    const classEntries = Object.entries(manifest.class_labels)
      .map(([id, label]) => ({ id: Number(id), label }))
      .sort((a, b) => a.id - b.id);
    const classLabels = classBox.selectAll("label")
      .data(classEntries)
      .join("label")
      .style("display", "inline-block")
      .style("margin-right", "8px");
    classLabels.append("input")
      .attr("type", "checkbox")
      .property("checked", (c) => this.state.selectedClasses.includes(c.id))
      .on("change", (_event, c) => {
        this.state.toggleClass(c.id);
        this.renderImagePicker(manifest);
        this.refreshMessages();
      });
    classLabels.append("span").text((c) => ` ${c.id} ${c.label}`);

    sel.append("div").attr("class", "control-group").attr("id", "image-picker");
    this.renderImagePicker(manifest);

    const methodBox = sel.append("div").attr("class", "control-group");
    methodBox.append("span").text("method ");
    methodBox.append("select")
      .on("change", (event) =>
        this.state.setMethod((event.target as HTMLSelectElement).value as ExplanationMethod),
      )
      .selectAll("option")
      .data(METHODS)
      .join("option")
      .attr("value", (m) => m)
      .property("selected", (m) => m === this.state.method)
      .text((m) => m);

    const measureBox = sel.append("div").attr("class", "control-group");
    measureBox.append("span").text("similarity ");
    measureBox.append("select")
      .on("change", (event) =>
        this.state.setMeasure((event.target as HTMLSelectElement).value as SimilarityMeasure),
      )
      .selectAll("option")
      .data(MEASURES)
      .join("option")
      .attr("value", (m) => m)
      .property("selected", (m) => m === this.state.measure)
      .text((m) => m);

    const runBox = sel.append("div").attr("class", "control-group");
    runBox.append("button")
      .text("run comparison task")
      .on("click", () => {
        const validation = this.validation();
        this.refreshMessages();
        if (validation.ok) this.onRun(this.buildSpec());
      });
    sel.append("div").attr("class", "validation-message").attr("role", "alert");
    this.refreshMessages();
  }

  private renderImagePicker(manifest: DatasetManifestPayload): void {
    const box = d3.select(this.root).select<HTMLElement>("#image-picker");
    box.selectAll("*").remove();
    if (this.state.selectedClasses.length !== 1) return;
    const classId = this.state.selectedClasses[0];
    const images = manifest.images.filter((i) => i.class_index === classId);
    box.append("span").text("image (multi-model focus) ");
    box.append("select")
      .on("change", (event) => {
        const value = (event.target as HTMLSelectElement).value;
        this.state.setSelectedImage(value || null);
      })
      .selectAll("option")
      .data([{ image_ref: "", class_index: classId }, ...images])
      .join("option")
      .attr("value", (i) => i.image_ref)
      .property("selected", (i) => i.image_ref === (this.state.selectedImage ?? ""))
      .text((i) => i.image_ref || "(whole class)");
  }

  /** Visible validation: the 13-model limit and structural task problems. */
  refreshMessages(): void {
    const box = d3.select(this.root).select(".validation-message");
    if (box.empty()) return;
    const problems: string[] = [];
    if (this.state.validationMessage) problems.push(this.state.validationMessage);
    const validation = this.validation();
    if (!validation.ok) problems.push(...validation.problems);
    box.text(problems.join("; "));
  }
}
