/** (E) Supplemental View: range/average class-accuracy bars before any
 * selection, then per-class accuracy scatterplots, the selected image, and
 * the similarity heatmap for multi-model tasks. */

import * as d3 from "d3";

import type { ClassAccuracyPlot, ClassStatBar, SimilarityCell } from "../viewmodels";

const BAR_W = 300;
const BAR_H = 140;
const HEAT_CELL = 34;
const MARGIN = { top: 14, right: 8, bottom: 40, left: 40 };

function barChart(target: d3.Selection<HTMLDivElement, unknown, null, undefined>,
                  title: string, bars: ClassStatBar[]): void {
  target.append("div").attr("class", "chart-title").text(title);
  const svg = target.append("svg").attr("width", BAR_W).attr("height", BAR_H);
  if (!bars.length) {
    svg.append("text").attr("x", 8, ).attr("y", 24).text("needs 2+ models");
    return;
  }
  const x = d3.scaleBand<string>()
    .domain(bars.map((b) => b.label))
    .range([MARGIN.left, BAR_W - MARGIN.right])
    .padding(0.25);
  const y = d3.scaleLinear().domain([0, 1]).range([BAR_H - MARGIN.bottom, MARGIN.top]);
  svg.append("g")
    .attr("transform", `translate(${MARGIN.left},0)`)
    .call(d3.axisLeft(y).ticks(4, "~p"));
  svg.append("g")
    .attr("transform", `translate(0,${BAR_H - MARGIN.bottom})`)
    .call(d3.axisBottom(x))
    .selectAll("text")
    .attr("transform", "rotate(30)")
    .attr("text-anchor", "start")
    .attr("font-size", 8);
  svg.selectAll("rect")
    .data(bars)
    .join("rect")
    .attr("x", (b) => x(b.label) ?? 0)
    .attr("width", x.bandwidth())
    .attr("y", (b) => y(b.value))
    .attr("height", (b) => y(0) - y(b.value))
    .attr("fill", "#76b7b2")
    .append("title")
    .text((b) => `${b.label}: ${b.display}\n` +
      b.perModel.map((p) => `${p.modelId}: ${p.display}`).join("\n"));
}

export class SupplementalView {
  constructor(private readonly root: HTMLElement) {}

  scaffold(): void {
    const sel = d3.select(this.root);
    sel.selectAll("*").remove();
    sel.append("div").attr("class", "stat-bars");
    sel.append("div").attr("class", "class-plots");
    sel.append("div").attr("class", "task-extras");
  }

  renderStatBars(range: ClassStatBar[], averageTop: ClassStatBar[], averageBottom: ClassStatBar[]): void {
    const sel = d3.select(this.root).select<HTMLDivElement>(".stat-bars");
    sel.selectAll("*").remove();
    barChart(sel.append("div"), "Range of Class Accuracy", range);
    barChart(sel.append("div"), "Average of Class Accuracy (best)", averageTop);
    barChart(sel.append("div"), "Average of Class Accuracy (worst)", averageBottom);
  }

  /** One dot-per-model strip per selected class. */
  renderClassPlots(plots: ClassAccuracyPlot[]): void {
    const sel = d3.select(this.root).select<HTMLDivElement>(".class-plots");
    sel.selectAll("*").remove();
    for (const plot of plots) {
      const box = sel.append("div");
      box.append("div").attr("class", "chart-title")
        .text(`accuracy on ${plot.label}`);
      const svg = box.append("svg").attr("width", BAR_W).attr("height", 70);
      const x = d3.scaleLinear().domain([0, 1]).range([MARGIN.left, BAR_W - MARGIN.right]);
      svg.append("g")
        .attr("transform", "translate(0,44)")
        .call(d3.axisBottom(x).ticks(5, "~p"));
      svg.selectAll("circle")
        .data(plot.dots)
        .join("circle")
        .attr("cx", (d) => x(d.value))
        .attr("cy", 30)
        .attr("r", 5)
        .attr("fill", "#e15759")
        .attr("fill-opacity", 0.7)
        .append("title")
        .text((d) => `${d.modelId}: ${d.display}`);
    }
  }

  renderTaskExtras(selectedImageUrl: string | null, cells: SimilarityCell[],
                   labels: string[], measure: string): void {
    const sel = d3.select(this.root).select<HTMLDivElement>(".task-extras");
    sel.selectAll("*").remove();
    if (selectedImageUrl) {
      const box = sel.append("div");
      box.append("div").attr("class", "chart-title").text("selected image");
      box.append("img").attr("src", selectedImageUrl).attr("width", 128);
    }
    if (!cells.length) return;
    const box = sel.append("div");
    box.append("div").attr("class", "chart-title").text(`explanation similarity (${measure})`);
    const size = labels.length * HEAT_CELL;
    const svg = box.append("svg")
      .attr("width", size + MARGIN.left)
      .attr("height", size + MARGIN.bottom);
    const index = new Map(labels.map((l, i) => [l, i] as const));
    // SSIM can be negative; the color scale spans the measure's range
    const lo = measure === "ssim" ? -1 : 0;
    const color = d3.scaleSequential(d3.interpolateYlGnBu).domain([lo, 1]);
    const cellSel = svg.append("g")
      .attr("transform", `translate(${MARGIN.left},0)`)
      .selectAll("g")
      .data(cells)
      .join("g")
      .attr("transform", (c) =>
        `translate(${(index.get(c.col) ?? 0) * HEAT_CELL},${(index.get(c.row) ?? 0) * HEAT_CELL})`);
    cellSel.append("rect")
      .attr("width", HEAT_CELL - 1)
      .attr("height", HEAT_CELL - 1)
      .attr("fill", (c) => color(c.value));
    cellSel.append("text")
      .attr("x", HEAT_CELL / 2)
      .attr("y", HEAT_CELL / 2 + 3)
      .attr("text-anchor", "middle")
      .attr("font-size", 9)
      .text((c) => c.display);
    labels.forEach((label, i) => {
      svg.append("text")
        .attr("x", MARGIN.left - 4)
        .attr("y", i * HEAT_CELL + HEAT_CELL / 2 + 3)
        .attr("text-anchor", "end")
        .attr("font-size", 9)
        .text(label);
      svg.append("text")
        .attr("x", MARGIN.left + i * HEAT_CELL + HEAT_CELL / 2)
        .attr("y", size + 12)
        .attr("text-anchor", "middle")
        .attr("font-size", 9)
        .text(label);
    });
  }
}
