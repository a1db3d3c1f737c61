/** (B) Distribution Graph: zoomable 2D class scatter colored by root group. */

import * as d3 from "d3";

import type { ViewState } from "../state";
import type { ProjectionPoint } from "../viewmodels";

const W = 420;
const H = 420;
const PAD = 24;

export class DistributionGraph {
  constructor(private readonly root: HTMLElement, private readonly state: ViewState) {}

  render(points: ProjectionPoint[], modelLabel: string, rootLabels: string[]): void {
    const sel = d3.select(this.root);
    sel.selectAll("*").remove();
    sel.append("div").attr("class", "chart-title").text(`class distribution — ${modelLabel}`);
    const svg = sel.append("svg").attr("width", W).attr("height", H);
    if (!points.length) {
      svg.append("text").attr("x", 12).attr("y", 30).text("no projection available");
      return;
    }
    const x = d3
      .scaleLinear()
      .domain(d3.extent(points, (p) => p.x) as [number, number])
      .nice()
      .range([PAD, W - PAD]);
    const y = d3
      .scaleLinear()
      .domain(d3.extent(points, (p) => p.y) as [number, number])
      .nice()
      .range([H - PAD, PAD]);

    const body = svg.append("g");
    const dots = body.selectAll("circle")
      .data(points)
      .join("circle")
      .attr("cx", (p) => x(p.x))
      .attr("cy", (p) => y(p.y))
      .attr("r", 4)
      .attr("fill", (p) => p.color)
      .attr("fill-opacity", 0.8)
      .attr("cursor", "pointer")
      .on("click", (_event, p) => this.state.toggleClass(p.classId));
    dots.append("title").text(
      (p) => `${p.label}\nroot: ${rootLabels[p.root] ?? p.root}`,
    );

    svg.call(
      d3.zoom<SVGSVGElement, unknown>()
        .scaleExtent([0.5, 20])
        .on("zoom", (event) => body.attr("transform", event.transform.toString())),
    );

    const legend = sel.append("div").attr("class", "root-legend");
    rootLabels.forEach((label, i) => {
      const item = legend.append("span").style("margin-right", "10px");
      item.append("span")
        .style("display", "inline-block")
        .style("width", "10px")
        .style("height", "10px")
        .style("margin-right", "4px")
        .style("background", points.find((p) => p.root === i)?.color ?? "#999");
      item.append("span").text(label);
    });
  }
}
