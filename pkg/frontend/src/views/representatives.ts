// Representative selection: parallel coordinates over the group's channel
// attributes with brushing, a filtered player table, the avatar placeholder
// panel for the clicked row, and the dynamic representative table that also
// receives players promoted from the uncertainty view.

import * as d3 from "d3";
import type { GroupPayload, GroupPlayer } from "../types";
import type { ViewState } from "../state";

const WIDTH = 640;
const HEIGHT = 240;
const MARGIN = { top: 24, bottom: 12, left: 24, right: 24 };

function avatarGlyph(avatarId: number | null): string {
  // placeholder glyph keyed by avatar id (no game art available)
  if (avatarId === null) return "?";
  const glyphs = ["◆", "●", "▲", "■", "★", "✦", "◐", "▰"];
  return glyphs[avatarId % glyphs.length];
}

export class RepresentativesView {
  private root: d3.Selection<HTMLElement, unknown, null, undefined>;
  private state: ViewState;
  private onPick: (player: number) => void;
  private payload: GroupPayload | null = null;

  constructor(container: HTMLElement, state: ViewState, onPick: (player: number) => void) {
    this.root = d3.select(container).classed("representatives-view", true);
    this.state = state;
    this.onPick = onPick;
    this.state.subscribe(() => this.renderRepTable());
  }

  render(payload: GroupPayload): void {
    this.payload = payload;
    this.root.selectAll("*").remove();
    this.root.append("div").attr("class", "parallel-coords");
    this.root.append("div").attr("class", "avatar-panel");
    this.root.append("div").attr("class", "player-table");
    this.root.append("div").attr("class", "rep-table");
    this.renderParallel(payload);
    this.renderPlayerTable(this.filtered());
    this.renderRepTable();
  }

  private renderParallel(payload: GroupPayload): void {
    const container = this.root.select<HTMLElement>("div.parallel-coords");
    const svg = container
      .append("svg")
      .attr("viewBox", `0 0 ${WIDTH} ${HEIGHT}`)
      .attr("width", WIDTH)
      .attr("height", HEIGHT);
    const names = payload.attributes;
    const x = d3.scalePoint<string>().domain(names).range([MARGIN.left, WIDTH - MARGIN.right]);
    const scales: Record<string, d3.ScaleLinear<number, number>> = {};
    for (const name of names) {
      const [lo, hi] = payload.ranges[name];
      scales[name] = d3
        .scaleLinear()
        .domain(lo === hi ? [lo - 1, hi + 1] : [lo, hi])
        .range([HEIGHT - MARGIN.bottom, MARGIN.top]);
    }
    const line = (player: GroupPlayer) =>
      names
        .map((name, i) => {
          const px = x(name) ?? 0;
          const py = scales[name](player.attributes[name]);
          return `${i === 0 ? "M" : "L"}${px},${py}`;
        })
        .join("");
    svg
      .selectAll("path.player-line")
      .data(payload.players)
      .enter()
      .append("path")
      .attr("class", "player-line")
      .attr("data-player", (p) => p.player)
      .attr("d", line)
      .attr("fill", "none")
      .attr("stroke", "#5680af")
      .attr("stroke-opacity", 0.45);
    const axes = svg
      .selectAll("g.axis")
      .data(names)
      .enter()
      .append("g")
      .attr("class", "axis")
      .attr("transform", (name) => `translate(${x(name)},0)`);
    axes.each((name, i, nodes) => {
      d3.select(nodes[i]).call(d3.axisLeft(scales[name]).ticks(4) as never);
    });
    axes
      .append("text")
      .attr("class", "axis-label")
      .attr("y", 12)
      .attr("text-anchor", "middle")
      .text((name) => name);
    axes.each((name, i, nodes) => {
      const brush = d3
        .brushY()
        .extent([
          [-8, MARGIN.top],
          [8, HEIGHT - MARGIN.bottom],
        ])
        .on("end", (event: d3.D3BrushEvent<unknown>) => {
          if (event.selection) {
            const [y0, y1] = event.selection as [number, number];
            this.state.brushedRanges[name] = [
              scales[name].invert(y1),
              scales[name].invert(y0),
            ];
          } else {
            delete this.state.brushedRanges[name];
          }
          this.renderPlayerTable(this.filtered());
        });
      d3.select(nodes[i]).append("g").attr("class", "brush").call(brush as never);
    });
  }

  filtered(): GroupPlayer[] {
    if (!this.payload) return [];
    return this.payload.players.filter((p) =>
      Object.entries(this.state.brushedRanges).every(
        ([name, [lo, hi]]) => p.attributes[name] >= lo && p.attributes[name] <= hi,
      ),
    );
  }

  private renderPlayerTable(players: GroupPlayer[]): void {
    const container = this.root.select<HTMLElement>("div.player-table");
    container.selectAll("*").remove();
    container.append("h3").text(`Players (${players.length})`);
    const rows = container
      .append("table")
      .append("tbody")
      .selectAll("tr")
      .data(players)
      .enter()
      .append("tr")
      .attr("data-player", (p) => p.player)
      .on("click", (_, p) => {
        this.showAvatar(p);
        if (this.state.stepAllows("representative")) this.onPick(p.player);
      });
    rows.append("td").text((p) => p.player);
    rows.append("td").text((p) => avatarGlyph(p.displayed_avatar));
    rows
      .append("td")
      .text((p) => (p.attributes["friend_count"] ?? 0).toFixed(0));
  }

  private showAvatar(player: GroupPlayer): void {
    const panel = this.root.select<HTMLElement>("div.avatar-panel");
    panel.selectAll("*").remove();
    panel
      .append("div")
      .attr("class", "avatar-glyph")
      .attr("data-avatar", player.displayed_avatar ?? "none")
      .text(avatarGlyph(player.displayed_avatar));
    panel.append("div").text(`player ${player.player}`);
  }

  renderRepTable(): void {
    const container = this.root.select<HTMLElement>("div.rep-table");
    if (container.empty()) return;
    container.selectAll("*").remove();
    container.append("h3").text("Representatives");
    const rows = container
      .append("table")
      .append("tbody")
      .selectAll("tr")
      .data(this.state.representatives)
      .enter()
      .append("tr")
      .attr("data-player", (p) => p)
      .classed("promoted", (p) => this.state.promoted.includes(p))
      .on("click", (_, p) => {
        if (this.state.stepAllows("representative") || this.state.step === "2.2") {
          this.onPick(p);
        }
      });
    rows.append("td").text((p) => p);
    rows
      .append("td")
      .text((p) => (this.state.promoted.includes(p) ? "re-mediation" : "expert pick"));
  }
}
