/** (A) Overall Information: complexity/accuracy scatter, per-root radar with
 * a selectable legend, and two zoomable leaf-accuracy bar charts. */

import * as d3 from "d3";

import { formatAccuracy } from "../format";
import type { ViewState } from "../state";
import type { LeafBar, ModelPoint, RadarSeries } from "../viewmodels";

const SCATTER_W = 320;
const SCATTER_H = 200;
const RADAR_SIZE = 220;
const BARS_W = 320;
const BARS_H = 180;
const MARGIN = { top: 16, right: 12, bottom: 28, left: 44 };

export class ModelScatterChart {
  constructor(private readonly root: HTMLElement, private readonly state: ViewState) {}

  render(points: ModelPoint[]): void {
    const sel = d3.select(this.root);
    sel.selectAll("*").remove();
    const svg = sel.append("svg").attr("width", SCATTER_W).attr("height", SCATTER_H);
    const x = d3
      .scaleLog()
      .domain(d3.extent(points, (p) => p.x) as [number, number])
      .nice()
      .range([MARGIN.left, SCATTER_W - MARGIN.right]);
    const y = d3
      .scaleLinear()
      .domain([0, 1])
      .range([SCATTER_H - MARGIN.bottom, MARGIN.top]);
    svg.append("g")
      .attr("transform", `translate(0,${SCATTER_H - MARGIN.bottom})`)
      .call(d3.axisBottom(x).ticks(4, "~s"));
    svg.append("g")
      .attr("transform", `translate(${MARGIN.left},0)`)
      .call(d3.axisLeft(y).ticks(5, "~p"));
    svg.selectAll("circle")
      .data(points)
      .join("circle")
      .attr("cx", (p) => x(p.x))
      .attr("cy", (p) => y(p.y))
      .attr("r", 5)
      .attr("fill", (p) => (p.modelId === this.state.pinnedModel ? "#e15759" : "#4e79a7"))
      .attr("cursor", "pointer")
      .on("click", (_event, p) => this.state.pinModel(p.modelId))
      .append("title")
      .text((p) => `${p.label}\nparams ${p.display.params}\naccuracy ${p.display.accuracy}`);
  }
}

export class RadarChart {
  constructor(private readonly root: HTMLElement, private readonly state: ViewState) {}

  render(series: RadarSeries[], rootLabels: string[]): void {
    const sel = d3.select(this.root);
    sel.selectAll("*").remove();
    const wrap = sel.append("div").style("display", "flex");
    const svg = wrap.append("svg").attr("width", RADAR_SIZE).attr("height", RADAR_SIZE);
    const cx = RADAR_SIZE / 2;
    const cy = RADAR_SIZE / 2;
    const radius = RADAR_SIZE / 2 - 28;
    const angle = (i: number) => (Math.PI * 2 * i) / rootLabels.length - Math.PI / 2;

    const grid = svg.append("g").attr("stroke", "#ddd").attr("fill", "none");
    for (const r of [0.25, 0.5, 0.75, 1]) {
      grid.append("polygon").attr(
        "points",
        rootLabels
          .map((_l, i) => `${cx + Math.cos(angle(i)) * radius * r},${cy + Math.sin(angle(i)) * radius * r}`)
          .join(" "),
      );
    }
    rootLabels.forEach((label, i) => {
      svg.append("text")
        .attr("x", cx + Math.cos(angle(i)) * (radius + 14))
        .attr("y", cy + Math.sin(angle(i)) * (radius + 14))
        .attr("text-anchor", "middle")
        .attr("font-size", 10)
        .text(label);
    });

    const palette = d3.scaleOrdinal(d3.schemeTableau10).domain(series.map((s) => s.modelId));
    for (const s of series) {
      if (s.hidden) continue;
      const pts = s.values
        .map((v, i) =>
          v.value === null
            ? null
            : `${cx + Math.cos(angle(i)) * radius * v.value},${cy + Math.sin(angle(i)) * radius * v.value}`,
        )
        .filter((p): p is string => p !== null);
      svg.append("polygon")
        .attr("points", pts.join(" "))
        .attr("fill", "none")
        .attr("stroke", palette(s.modelId))
        .attr("stroke-width", 1.5)
        .append("title")
        .text(`${s.label}: ${s.values.map((v) => `${v.axis} ${v.display}`).join(", ")}`);
    }

    // selectable legend; toggling hides series without mutating the selection
    const legend = wrap.append("div").attr("class", "radar-legend");
    legend.selectAll("div")
      .data(series)
      .join("div")
      .style("cursor", "pointer")
      .style("opacity", (s) => (s.hidden ? 0.35 : 1))
      .style("color", (s) => palette(s.modelId))
      .text((s) => s.label)
      .on("click", (_event, s) => this.state.toggleRadarSeries(s.modelId));
  }
}

export class LeafAccuracyBars {
  constructor(private readonly root: HTMLElement, private readonly title: string) {}

  render(bars: LeafBar[]): void {
    const sel = d3.select(this.root);
    sel.selectAll("*").remove();
    sel.append("div").attr("class", "chart-title").text(this.title);
    const svg = sel.append("svg").attr("width", BARS_W).attr("height", BARS_H);
    if (!bars.length) {
      svg.append("text").attr("x", 10).attr("y", 30).text("pin a model to populate");
      return;
    }
    const x = d3
      .scaleBand<number>()
      .domain(bars.map((b) => b.classId))
      .range([MARGIN.left, BARS_W - MARGIN.right])
      .padding(0.15);
    const y = d3.scaleLinear().domain([0, 1]).range([BARS_H - MARGIN.bottom, MARGIN.top]);
    svg.append("g")
      .attr("transform", `translate(${MARGIN.left},0)`)
      .call(d3.axisLeft(y).ticks(4, "~p"));
    const clip = svg.append("clipPath").attr("id", `clip-${this.title.replace(/\W+/g, "")}`);
    clip.append("rect")
      .attr("x", MARGIN.left)
      .attr("y", 0)
      .attr("width", BARS_W - MARGIN.left - MARGIN.right)
      .attr("height", BARS_H);
    const body = svg.append("g").attr("clip-path", `url(#clip-${this.title.replace(/\W+/g, "")})`);
    const barsSel = body.selectAll("rect")
      .data(bars)
      .join("rect")
      .attr("x", (b) => x(b.classId) ?? 0)
      .attr("width", x.bandwidth())
      .attr("y", (b) => y(b.value))
      .attr("height", (b) => y(0) - y(b.value))
      .attr("fill", "#59a14f");
    barsSel.append("title").text((b) => `${b.label}: ${b.display}`);

    // zoomable along x: rescale band positions under the current transform
    const zoom = d3.zoom<SVGSVGElement, unknown>()
      .scaleExtent([1, 8])
      .on("zoom", (event) => {
        const t = event.transform;
        barsSel
          .attr("x", (b) => t.applyX(x(b.classId) ?? 0))
          .attr("width", x.bandwidth() * t.k);
      });
    svg.call(zoom);
  }
}

export function accuracyAxisLabel(value: number | null): string {
  return formatAccuracy(value);
}
