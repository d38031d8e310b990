// Result comparison: line charts of the group-mean metrics per propagation
// iteration, with hover details straight from the payload.

import * as d3 from "d3";
import type { HistoryPayload, IterationRecord } from "../types";

const WIDTH = 420;
const HEIGHT = 180;
const MARGIN = { top: 18, right: 12, bottom: 24, left: 40 };

const SERIES: { key: string; pick: (r: IterationRecord) => number }[] = [
  { key: "content_diversity", pick: (r) => r.sd.content_diversity },
  { key: "total_sim", pick: (r) => r.sd.total_sim },
  { key: "fri_sim", pick: (r) => r.sd.fri_sim },
  { key: "recall", pick: (r) => r.quality.recall },
  { key: "hit_rate", pick: (r) => r.quality.hit_rate },
];

export class ComparisonView {
  private root: d3.Selection<HTMLElement, unknown, null, undefined>;

  constructor(container: HTMLElement) {
    this.root = d3.select(container).classed("comparison-view", true);
  }

  render(payload: HistoryPayload): void {
    this.root.selectAll("*").remove();
    this.root.append("h3").text("Result comparison");
    const records = payload.records;
    if (!records.length) {
      this.root.append("p").text("no iterations yet");
      return;
    }
    const svg = this.root
      .append("svg")
      .attr("class", "history-chart")
      .attr("viewBox", `0 0 ${WIDTH} ${HEIGHT}`)
      .attr("width", WIDTH)
      .attr("height", HEIGHT);
    const x = d3
      .scaleLinear()
      .domain([1, Math.max(2, records.length)])
      .range([MARGIN.left, WIDTH - MARGIN.right]);
    const y = d3
      .scaleLinear()
      .domain([0, 1])
      .range([HEIGHT - MARGIN.bottom, MARGIN.top]);
    svg
      .append("g")
      .attr("transform", `translate(0,${HEIGHT - MARGIN.bottom})`)
      .call(
        d3
          .axisBottom(x)
          .ticks(records.length)
          .tickFormat(d3.format("d")) as never,
      );
    svg
      .append("g")
      .attr("transform", `translate(${MARGIN.left},0)`)
      .call(d3.axisLeft(y).ticks(5) as never);
    const color = d3
      .scaleOrdinal<string>()
      .domain(SERIES.map((s) => s.key))
      .range(d3.schemeTableau10);
    const tooltip = this.root.append("div").attr("class", "tooltip").style("display", "none");
    for (const series of SERIES) {
      const line = d3
        .line<IterationRecord>()
        .x((r) => x(r.iteration))
        .y((r) => y(series.pick(r)));
      svg
        .append("path")
        .attr("class", "metric-line")
        .attr("data-metric", series.key)
        .attr("d", line(records) ?? "")
        .attr("fill", "none")
        .attr("stroke", color(series.key));
      svg
        .selectAll(`circle.point-${series.key}`)
        .data(records)
        .enter()
        .append("circle")
        .attr("class", `metric-point point-${series.key}`)
        .attr("data-metric", series.key)
        .attr("data-iteration", (r) => r.iteration)
        .attr("cx", (r) => x(r.iteration))
        .attr("cy", (r) => y(series.pick(r)))
        .attr("r", 3)
        .attr("fill", color(series.key))
        .on("mouseenter", (_, r) => {
          tooltip
            .style("display", "block")
            .text(`iter ${r.iteration} ${series.key}=${series.pick(r).toFixed(3)}`);
        })
        .on("mouseleave", () => tooltip.style("display", "none"));
    }
    const legend = this.root.append("div").attr("class", "legend");
    for (const series of SERIES) {
      legend
        .append("span")
        .attr("class", "legend-item")
        .style("color", color(series.key))
        .text(series.key);
    }
  }
}
