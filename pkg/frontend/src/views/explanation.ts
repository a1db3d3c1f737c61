/** (D) Visual Explanation View: method examples up front, then the sortable,
 * filterable result table with contour overlays, ROI crops, per-row CIH
 * panels (single-model tasks) and the debounced threshold slider. */

import * as d3 from "d3";

import type { ApiClient } from "../api";
import { THRESHOLD_DEBOUNCE_MS, debounce } from "../debounce";
import { formatThreshold } from "../format";
import type { ViewState } from "../state";
import type { CihPayload } from "../types";
import type { TableRowVm } from "../viewmodels";

const CIH_W = 128;
const CIH_H = 40;
const CHANNEL_COLORS = ["#d62728", "#2ca02c", "#1f77b4"];

export interface SortHandler {
  (column: "class_accuracy" | "confidence" | "overall_accuracy"): void;
}

export class ExplanationView {
  private readonly thresholdPush: (t: number) => void;

  constructor(
    private readonly root: HTMLElement,
    private readonly state: ViewState,
    private readonly api: ApiClient,
    onThreshold: (t: number) => void,
    private readonly onSort: SortHandler,
    private readonly onFilter: (needle: string) => void,
  ) {
    this.thresholdPush = debounce(onThreshold, THRESHOLD_DEBOUNCE_MS);
  }

  renderExamples(methods: Record<string, string>, imageRef: string): void {
    const sel = d3.select(this.root).select<HTMLElement>(".examples");
    sel.selectAll("*").remove();
    sel.append("div").attr("class", "chart-title")
      .text(`explanation method examples — ${imageRef}`);
    const strip = sel.append("div").style("display", "flex").style("gap", "8px");
    for (const [method, token] of Object.entries(methods)) {
      const cell = strip.append("figure").style("margin", "0");
      cell.append("img")
        .attr("src", this.api.artifactUrl(token))
        .attr("width", 96)
        .attr("alt", method);
      cell.append("figcaption").style("font-size", "10px").text(method);
    }
  }

  renderControls(): void {
    const sel = d3.select(this.root).select<HTMLElement>(".table-controls");
    sel.selectAll("*").remove();

    sel.append("span").text("filter ");
    sel.append("input")
      .attr("type", "search")
      .attr("placeholder", "model or class name")
      .property("value", this.state.filter)
      .on("input", (event) => this.onFilter((event.target as HTMLInputElement).value));

    const sliderBox = sel.append("span").style("margin-left", "16px");
    sliderBox.append("span").text("threshold ");
    const value = sliderBox.append("span").text(formatThreshold(this.state.threshold));
    sliderBox.append("input")
      .attr("type", "range")
      .attr("min", 0)
      .attr("max", 1)
      .attr("step", 0.05)
      .property("value", this.state.threshold)
      .on("input", (event) => {
        const t = Number((event.target as HTMLInputElement).value);
        value.text(formatThreshold(t));
        this.state.setThreshold(t);
        this.thresholdPush(t); // debounced API call
      });
  }

  renderTable(rows: TableRowVm[], showCih: boolean, statusLine: string): void {
    const sel = d3.select(this.root).select<HTMLElement>(".results");
    sel.selectAll("*").remove();
    sel.append("div").attr("class", "task-status").text(statusLine);
    if (!rows.length) {
      sel.append("div").attr("class", "empty-state").text("no rows yet — run a task");
      return;
    }
    const table = sel.append("table").attr("class", "results-table");
    const header = table.append("thead").append("tr");
    header.append("th").text("model");
    header.append("th").text("image");
    header.append("th").text("truth");
    header.append("th").text("predicted");
    const sortable: [string, "overall_accuracy" | "class_accuracy" | "confidence"][] = [
      ["overall acc", "overall_accuracy"],
      ["class acc", "class_accuracy"],
      ["confidence", "confidence"],
    ];
    for (const [label, column] of sortable) {
      const active = this.state.sort.column === column;
      const arrow = active ? (this.state.sort.order === "desc" ? " ↓" : " ↑") : "";
      header.append("th")
        .style("cursor", "pointer")
        .text(label + arrow)
        .on("click", () => this.onSort(column));
    }
    header.append("th").text("overlay");
    header.append("th").text("roi");
    if (showCih) header.append("th").text("cih");

    const body = table.append("tbody");
    for (const row of rows) {
      const tr = body.append("tr").attr("class", row.correct ? "row-correct" : "row-wrong");
      tr.append("td").text(row.modelLabel);
      tr.append("td").append("img").attr("src", row.imageUrl).attr("width", 48);
      tr.append("td").text(row.groundTruth);
      tr.append("td").text(row.predicted);
      tr.append("td").text(row.overallAccuracy);
      tr.append("td").text(row.classAccuracy);
      tr.append("td").text(row.confidence);
      tr.append("td").append("img").attr("src", row.overlayUrl).attr("width", 64);
      tr.append("td").append("img").attr("src", row.roiUrl).attr("width", 64);
      if (showCih) {
        const cell = tr.append("td");
        if (row.cihToken) {
          const holder = cell.append("div").attr("data-cih", row.cihToken);
          this.api.artifactJson<CihPayload>(row.cihToken).then((cih) => {
            if (!holder.empty()) this.renderCih(holder.node() as HTMLElement, cih);
          });
        }
      }
    }
  }

  /** Three per-channel sparklines over the 256 intensity bins. */
  renderCih(target: HTMLElement, cih: CihPayload): void {
    const svg = d3.select(target).append("svg").attr("width", CIH_W).attr("height", CIH_H);
    if (cih.empty_roi) {
      svg.append("text").attr("x", 4).attr("y", 20).attr("font-size", 9).text("empty ROI");
      return;
    }
    const peak = d3.max(cih.bins.flat()) ?? 1;
    const x = d3.scaleLinear().domain([0, 255]).range([0, CIH_W]);
    const y = d3.scaleLinear().domain([0, peak]).range([CIH_H, 0]);
    const line = d3.line<number>().x((_v, i) => x(i)).y((v) => y(v));
    cih.bins.forEach((channel, ch) => {
      svg.append("path")
        .attr("d", line(channel))
        .attr("fill", "none")
        .attr("stroke", CHANNEL_COLORS[ch])
        .attr("stroke-width", 1);
    });
    svg.append("title").text(`kept pixels: ${cih.kept_pixels}`);
  }

  scaffold(): void {
    const sel = d3.select(this.root);
    sel.selectAll("*").remove();
    sel.append("div").attr("class", "examples");
    sel.append("div").attr("class", "table-controls");
    sel.append("div").attr("class", "results");
    this.renderControls();
  }
}
