// Preference projection: one hexbin plot per channel, darker fill for
// denser bins, tooltips showing per-bin mean summaries, linked highlighting
// of the hovered bin's players across the other channels' plots, and
// click-to-select bins for group selection.

import * as d3 from "d3";
import { CHANNELS, type Channel, type HexBin, type ProjectionPayload } from "../types";
import type { ViewState } from "../state";

const WIDTH = 260;
const HEIGHT = 220;

function hexCorners(cx: number, cy: number, r: number): string {
  const points: string[] = [];
  for (let i = 0; i < 6; i++) {
    const angle = (Math.PI / 180) * (60 * i - 30); // pointy-top
    points.push(`${cx + r * Math.cos(angle)},${cy + r * Math.sin(angle)}`);
  }
  return points.join(" ");
}

export class ProjectionView {
  private root: d3.Selection<HTMLElement, unknown, null, undefined>;
  private state: ViewState;
  private onSelectionChange: () => void;
  private payloads: Partial<Record<Channel, ProjectionPayload>> = {};

  constructor(
    container: HTMLElement,
    state: ViewState,
    onSelectionChange: () => void = () => {},
  ) {
    this.root = d3.select(container).classed("projection-view", true);
    this.state = state;
    this.onSelectionChange = onSelectionChange;
  }

  render(payloads: Partial<Record<Channel, ProjectionPayload>>): void {
    this.payloads = payloads;
    this.root.selectAll("*").remove();
    for (const channel of CHANNELS) {
      const payload = payloads[channel];
      if (!payload) continue;
      this.renderChannel(channel, payload);
    }
  }

  private renderChannel(channel: Channel, payload: ProjectionPayload): void {
    const panel = this.root
      .append("div")
      .attr("class", "projection-panel")
      .attr("data-channel", channel);
    panel.append("h3").text(channel);
    const svg = panel
      .append("svg")
      .attr("viewBox", `0 0 ${WIDTH} ${HEIGHT}`)
      .attr("width", WIDTH)
      .attr("height", HEIGHT);
    const bins = payload.hexbins.bins;
    const radius = payload.hexbins.radius;
    const xs = bins.map((b) => radius * Math.sqrt(3) * (b.q + b.r / 2));
    const ys = bins.map((b) => radius * 1.5 * b.r);
    const x = d3
      .scaleLinear()
      .domain([(d3.min(xs) ?? 0) - radius, (d3.max(xs) ?? 1) + radius])
      .range([6, WIDTH - 6]);
    const y = d3
      .scaleLinear()
      .domain([(d3.min(ys) ?? 0) - radius, (d3.max(ys) ?? 1) + radius])
      .range([HEIGHT - 6, 6]);
    const maxCount = d3.max(bins, (b) => b.count) ?? 1;
    const fill = d3.scaleSequential(d3.interpolateBlues).domain([0, maxCount]);
    const screenR = Math.max(
      3,
      Math.abs(x(radius * Math.sqrt(3)) - x(0)) / Math.sqrt(3),
    );

    const tooltip = panel.append("div").attr("class", "tooltip").style("display", "none");

    svg
      .selectAll<SVGPolygonElement, HexBin>("polygon.hex")
      .data(bins)
      .enter()
      .append("polygon")
      .attr("class", "hex")
      .attr("data-count", (b) => b.count)
      .attr("data-bin", (b) => `${b.q},${b.r}`)
      .attr("points", (b) =>
        hexCorners(x(radius * Math.sqrt(3) * (b.q + b.r / 2)), y(radius * 1.5 * b.r), screenR),
      )
      .attr("fill", (b) => fill(b.count))
      .attr("fill-opacity", (b) => 0.35 + (0.65 * b.count) / maxCount)
      .classed("selected", (b) =>
        (this.state.selectedBins[channel] ?? []).some(([q, r]) => q === b.q && r === b.r),
      )
      .on("mouseenter", (_, b) => {
        const means = Object.entries(b.channel_means)
          .map(([k, v]) => `${k}: ${v.toFixed(3)}`)
          .join(", ");
        tooltip.style("display", "block").text(`${b.count} players | ${means}`);
        this.highlight(new Set(b.members));
      })
      .on("mouseleave", () => {
        tooltip.style("display", "none");
        this.highlight(new Set());
      })
      .on("click", (_, b) => {
        if (!this.state.stepAllows("group")) return;
        const current = this.state.selectedBins[channel] ?? [];
        const exists = current.some(([q, r]) => q === b.q && r === b.r);
        this.state.selectedBins[channel] = exists
          ? current.filter(([q, r]) => !(q === b.q && r === b.r))
          : [...current, [b.q, b.r]];
        svg
          .selectAll<SVGPolygonElement, HexBin>("polygon.hex")
          .classed("selected", (d) =>
            (this.state.selectedBins[channel] ?? []).some(
              ([q, r]) => q === d.q && r === d.r,
            ),
          );
        this.onSelectionChange();
      });
  }

  // linked highlighting: bins containing any hovered player light up in
  // every channel's plot
  highlight(players: Set<number>): void {
    this.state.hoveredPlayers = players;
    for (const channel of CHANNELS) {
      const payload = this.payloads[channel];
      if (!payload) continue;
      this.root
        .select(`div[data-channel="${channel}"]`)
        .selectAll<SVGPolygonElement, HexBin>("polygon.hex")
        .classed(
          "linked",
          (b) => players.size > 0 && b.members.some((m) => players.has(m)),
        );
    }
  }
}
