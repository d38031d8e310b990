// Preference ratio adjustment: the upper part holds per-channel sampling
// columns (radial band scatter, four band-frequency sliders, content
// diversity bar, Sample button), the fusion column (membership-pie scatter
// whose pie radius encodes the candidate's cosine similarity, per-channel
// weight sliders renormalising to sum 1 on release, Fusion button), and the
// ranking column (ratio table, Rank button, SD bars). The lower part is the
// lineup: one row per ranked candidate with per-channel positions and
// curves connecting candidates that appear in several channels.
//
// Sliders commit locally; each button click issues exactly one API call and
// the views re-render only from the response.

import * as d3 from "d3";
import type {
  Channel,
  FusePayload,
  RankPayload,
  RatioTableRow,
  SamplePayload,
} from "../types";
import type { ViewState } from "../state";

const RADIAL_SIZE = 200;
const LINEUP_WIDTH = 560;
const LINEUP_ROW = 22;

export interface AdjustmentCallbacks {
  onSample: (freqs: Record<string, number[]>, seed: number) => void;
  onFuse: (weights: Record<string, number>) => void;
  onRank: (n?: number) => void;
  onAssign: () => void;
}

export class AdjustmentView {
  private root: d3.Selection<HTMLElement, unknown, null, undefined>;
  private state: ViewState;
  private callbacks: AdjustmentCallbacks;
  private activeChannels: Channel[] = ["social", "avatar"];

  constructor(container: HTMLElement, state: ViewState, callbacks: AdjustmentCallbacks) {
    this.root = d3.select(container).classed("adjustment-view", true);
    this.state = state;
    this.callbacks = callbacks;
    this.scaffold();
  }

  setActiveChannels(channels: Channel[]): void {
    this.activeChannels = channels;
    this.scaffold();
  }

  private scaffold(): void {
    this.root.selectAll("*").remove();
    const upper = this.root.append("div").attr("class", "upper-part");
    for (const channel of this.activeChannels) {
      this.buildSamplingColumn(upper, channel);
    }
    this.buildFusionColumn(upper);
    this.buildRankingColumn(upper);
    this.root.append("div").attr("class", "lower-part");
    this.refreshGating();
  }

  private buildSamplingColumn(
    upper: d3.Selection<HTMLDivElement, unknown, null, undefined>,
    channel: Channel,
  ): void {
    const column = upper
      .append("div")
      .attr("class", "sampling-column")
      .attr("data-channel", channel);
    column.append("h3").text(channel);
    column
      .append("svg")
      .attr("class", "radial")
      .attr("viewBox", `0 0 ${RADIAL_SIZE} ${RADIAL_SIZE}`)
      .attr("width", RADIAL_SIZE)
      .attr("height", RADIAL_SIZE);
    const sliderBox = column.append("div").attr("class", "band-sliders");
    const freqs = this.state.freqs[channel] ?? [1, 1, 1, 1];
    for (let band = 0; band < 4; band++) {
      const row = sliderBox.append("label").attr("class", "band-slider-row");
      row.append("span").text(`band ${band}`);
      row
        .append("input")
        .attr("type", "range")
        .attr("min", 0)
        .attr("max", 1)
        .attr("step", 0.05)
        .attr("value", freqs[band])
        .attr("class", "band-slider")
        .attr("data-channel", channel)
        .attr("data-band", band)
        .on("change", (event: Event) => {
          // commit on release; the API call happens on the Sample click
          const value = Number((event.target as HTMLInputElement).value);
          const current = [...(this.state.freqs[channel] ?? [1, 1, 1, 1])] as [
            number,
            number,
            number,
            number,
          ];
          current[band] = value;
          this.state.freqs[channel] = current;
        });
      row.append("output").attr("data-band", band).text(freqs[band]);
    }
    column.append("div").attr("class", "diversity-bar").attr("data-channel", channel);
    column
      .append("button")
      .attr("class", "sample-button")
      .text("Sample")
      .on("click", () => {
        const freqsOut: Record<string, number[]> = {};
        for (const ch of this.activeChannels) {
          freqsOut[ch] = [...(this.state.freqs[ch] ?? [1, 1, 1, 1])];
        }
        this.callbacks.onSample(freqsOut, this.state.sampleSeed);
      });
  }

  private buildFusionColumn(
    upper: d3.Selection<HTMLDivElement, unknown, null, undefined>,
  ): void {
    const column = upper.append("div").attr("class", "fusion-column");
    column.append("h3").text("fusion");
    column
      .append("svg")
      .attr("class", "fusion-scatter")
      .attr("viewBox", `0 0 ${RADIAL_SIZE} ${RADIAL_SIZE}`)
      .attr("width", RADIAL_SIZE)
      .attr("height", RADIAL_SIZE);
    const sliderBox = column.append("div").attr("class", "weight-sliders");
    for (const channel of this.activeChannels) {
      const value = this.state.weights[channel] ?? 1 / this.activeChannels.length;
      this.state.weights[channel] = value;
      const row = sliderBox.append("label").attr("class", "weight-slider-row");
      row.append("span").text(channel);
      row
        .append("input")
        .attr("type", "range")
        .attr("min", 0)
        .attr("max", 1)
        .attr("step", 0.05)
        .attr("value", value)
        .attr("class", "weight-slider")
        .attr("data-channel", channel)
        .on("change", (event: Event) => {
          // renormalise all weights to sum 1 on release
          const raw = Number((event.target as HTMLInputElement).value);
          const renormalised = this.state.renormalisedWeights(channel, raw);
          this.state.setWeights(renormalised);
          this.refreshWeightSliders();
        });
      row
        .append("output")
        .attr("data-channel", channel)
        .text(value.toFixed(2));
    }
    column
      .append("button")
      .attr("class", "fusion-button")
      .text("Fusion")
      .on("click", () => {
        const weights: Record<string, number> = {};
        for (const ch of this.activeChannels) weights[ch] = this.state.weights[ch] ?? 0;
        this.callbacks.onFuse(weights);
      });
  }

  private buildRankingColumn(
    upper: d3.Selection<HTMLDivElement, unknown, null, undefined>,
  ): void {
    const column = upper.append("div").attr("class", "ranking-column");
    column.append("h3").text("ranking");
    column.append("div").attr("class", "ratio-table");
    column
      .append("button")
      .attr("class", "rank-button")
      .text("Rank")
      .on("click", () => this.callbacks.onRank());
    column
      .append("button")
      .attr("class", "assign-button")
      .text("Assign ratio")
      .on("click", () => this.callbacks.onAssign());
    column.append("div").attr("class", "sd-bars");
  }

  refreshGating(): void {
    const mediate = this.state.stepAllows("sample");
    this.root.selectAll("button.sample-button").attr("disabled", mediate ? null : "");
    this.root.selectAll("button.fusion-button").attr("disabled", mediate ? null : "");
    this.root.selectAll("button.rank-button").attr("disabled", mediate ? null : "");
    this.root
      .selectAll("button.assign-button")
      .attr("disabled", this.state.stepAllows("assign") ? null : "");
  }

  refreshWeightSliders(): void {
    for (const channel of this.activeChannels) {
      const value = this.state.weights[channel] ?? 0;
      this.root
        .select<HTMLInputElement>(`input.weight-slider[data-channel="${channel}"]`)
        .property("value", value);
      this.root
        .select(`output[data-channel="${channel}"]`)
        .text(value.toFixed(2));
    }
  }

  refreshFreqSliders(): void {
    for (const channel of this.activeChannels) {
      const freqs = this.state.freqs[channel] ?? [1, 1, 1, 1];
      for (let band = 0; band < 4; band++) {
        this.root
          .select<HTMLInputElement>(
            `input.band-slider[data-channel="${channel}"][data-band="${band}"]`,
          )
          .property("value", freqs[band]);
        this.root
          .select(
            `div[data-channel="${channel}"] output[data-band="${band}"]`,
          )
          .text(freqs[band]);
      }
    }
  }

  renderSample(payload: SamplePayload): void {
    for (const [channel, data] of Object.entries(payload.channels)) {
      const column = this.root.select(`div.sampling-column[data-channel="${channel}"]`);
      if (column.empty()) continue;
      const svg = column.select("svg.radial");
      svg.selectAll("*").remove();
      const center = RADIAL_SIZE / 2;
      const ringScale = (RADIAL_SIZE / 2 - 10) / Math.max(...data.layout.ring_radii);
      svg
        .selectAll("circle.ring")
        .data(data.layout.ring_radii)
        .enter()
        .append("circle")
        .attr("class", "ring")
        .attr("cx", center)
        .attr("cy", center)
        .attr("r", (r) => r * ringScale)
        .attr("fill", "none")
        .attr("stroke", "#cccccc");
      const sampledIds = new Set(data.sampled.map(([pid]) => pid));
      svg
        .selectAll("circle.candidate")
        .data(Object.entries(data.layout.points))
        .enter()
        .append("circle")
        .attr("class", "candidate")
        .attr("data-player", ([pid]) => pid)
        .attr("cx", ([, p]) => center + p.radius * ringScale * Math.cos(p.angle))
        .attr("cy", ([, p]) => center + p.radius * ringScale * Math.sin(p.angle))
        .attr("r", 3)
        .classed("sampled", ([pid]) => sampledIds.has(Number(pid)));
      const bar = column.select("div.diversity-bar");
      bar.selectAll("*").remove();
      bar
        .append("div")
        .attr("class", "bar")
        .style("width", `${Math.round(data.content_diversity * 100)}%`);
      bar
        .append("span")
        .attr("class", "bar-value")
        .text(data.content_diversity.toFixed(3));
    }
  }

  renderFuse(payload: FusePayload): void {
    const svg = this.root.select("svg.fusion-scatter");
    svg.selectAll("*").remove();
    const coords = Object.values(payload.positions);
    const x = d3
      .scaleLinear()
      .domain(d3.extent(coords, (c) => c[0]) as [number, number])
      .range([12, RADIAL_SIZE - 12]);
    const y = d3
      .scaleLinear()
      .domain(d3.extent(coords, (c) => c[1]) as [number, number])
      .range([RADIAL_SIZE - 12, 12]);
    const arc = d3.arc<d3.PieArcDatum<string>>();
    const pie = d3.pie<string>().value(() => 1);
    const color = d3
      .scaleOrdinal<string>()
      .domain(["social", "gameplay", "avatar", "baseline"])
      .range(["#5680af", "#d6913c", "#6a9e58", "#8a6fb0"]);
    const groups = svg
      .selectAll("g.pie")
      .data(payload.entries)
      .enter()
      .append("g")
      .attr("class", "pie")
      .attr("data-player", (e) => e.player)
      .attr("data-members", (e) => e.members.join("+"))
      .attr("transform", (e) => {
        const pos = payload.positions[String(e.player)] ?? [0, 0];
        return `translate(${x(pos[0])},${y(pos[1])})`;
      });
    groups.each((entry, i, nodes) => {
      // pie radius encodes the candidate's cosine similarity
      const radius = 2 + entry.radius * 8;
      d3.select(nodes[i])
        .selectAll("path.slice")
        .data(pie(entry.members))
        .enter()
        .append("path")
        .attr("class", "slice")
        .attr("d", (d) => arc({ ...d, innerRadius: 0, outerRadius: radius } as never))
        .attr("fill", (d) => color(d.data));
    });
  }

  renderRank(payload: RankPayload): void {
    this.renderRatioTable(payload.ratio_table);
    this.renderSdBars(payload);
    this.renderLineup(payload);
  }

  renderRatioTable(rows: RatioTableRow[]): void {
    const container = this.root.select<HTMLElement>("div.ratio-table");
    container.selectAll("*").remove();
    const table = container.append("table");
    const header = table.append("thead").append("tr");
    for (const title of ["row", "rep", "intra", "inter", "total_sim"]) {
      header.append("th").text(title);
    }
    const body = table
      .append("tbody")
      .selectAll("tr")
      .data(rows)
      .enter()
      .append("tr")
      .attr("class", "ratio-row")
      .attr("data-row", (r) => r.row_id)
      .on("click", (_, r) => {
        // repopulate the sliders with this row's recorded values
        for (const [channel, values] of Object.entries(r.intra)) {
          this.state.freqs[channel as Channel] = [...values] as [
            number,
            number,
            number,
            number,
          ];
        }
        this.state.setWeights(r.inter);
        this.refreshFreqSliders();
        this.refreshWeightSliders();
      });
    body.append("td").text((r) => r.row_id);
    body.append("td").text((r) => r.representative);
    body
      .append("td")
      .text((r) =>
        Object.entries(r.intra)
          .map(([c, v]) => `${c}:[${v.join(",")}]`)
          .join(" "),
      );
    body
      .append("td")
      .text((r) =>
        Object.entries(r.inter)
          .map(([c, w]) => `${c}:${w}`)
          .join(" "),
      );
    body.append("td").text((r) => r.sd.total_sim.toFixed(3));
  }

  private renderSdBars(payload: RankPayload): void {
    const container = this.root.select<HTMLElement>("div.sd-bars");
    container.selectAll("*").remove();
    const data: [string, number][] = [
      ["content_diversity", payload.sd.content_diversity],
      ["total_sim", payload.sd.total_sim],
      ["fri_sim", payload.sd.fri_sim],
    ];
    const rows = container
      .selectAll("div.sd-bar")
      .data(data)
      .enter()
      .append("div")
      .attr("class", "sd-bar")
      .attr("data-metric", ([name]) => name);
    rows.append("span").text(([name]) => name);
    rows
      .append("div")
      .attr("class", "bar")
      .style("width", ([, v]) => `${Math.round(Math.max(0, v) * 100)}%`);
    rows
      .append("span")
      .attr("class", "bar-value")
      .text(([, v]) => v.toFixed(3));
  }

  renderLineup(payload: RankPayload): void {
    const container = this.root.select<HTMLElement>("div.lower-part");
    container.selectAll("*").remove();
    container.append("h3").text("Lineup");
    const channels = this.activeChannels;
    const height = (payload.lineup.length + 1) * LINEUP_ROW + 10;
    const svg = container
      .append("svg")
      .attr("class", "lineup")
      .attr("viewBox", `0 0 ${LINEUP_WIDTH} ${height}`)
      .attr("width", LINEUP_WIDTH)
      .attr("height", height);
    const columnX = d3
      .scalePoint<string>()
      .domain(channels)
      .range([180, LINEUP_WIDTH - 60]);
    svg
      .selectAll("text.column-header")
      .data(channels)
      .enter()
      .append("text")
      .attr("class", "column-header")
      .attr("x", (c) => columnX(c) ?? 0)
      .attr("y", 14)
      .attr("text-anchor", "middle")
      .text((c) => c);
    const rowY = (i: number) => (i + 1) * LINEUP_ROW + 12;
    const rows = svg
      .selectAll("g.lineup-row")
      .data(payload.lineup)
      .enter()
      .append("g")
      .attr("class", "lineup-row")
      .attr("data-player", (r) => r.player);
    rows
      .append("text")
      .attr("x", 8)
      .attr("y", (_, i) => rowY(i))
      .text(
        (r) =>
          `#${r.rank} p${r.player} ${(r.probability * 100).toFixed(1)}% ` +
          `ts ${r.total_sim.toFixed(2)} fs ${r.fri_sim.toFixed(2)}`,
      );
    rows.each((row, i, nodes) => {
      const g = d3.select(nodes[i]);
      const present = row.members.filter((m) => channels.includes(m as Channel));
      for (const member of present) {
        g.append("circle")
          .attr("class", "lineup-dot")
          .attr("data-channel", member)
          .attr("cx", columnX(member) ?? 0)
          .attr("cy", rowY(i) - 4)
          .attr("r", 4)
          .append("title")
          .text(`${member} sim ${(row.sims[member] ?? 0).toFixed(3)}`);
      }
      // a curve connects the same candidate appearing in several channels
      if (present.length > 1) {
        const points = present
          .map((m) => [columnX(m) ?? 0, rowY(i) - 4] as [number, number])
          .sort((a, b) => a[0] - b[0]);
        const line = d3
          .line<[number, number]>()
          .curve(d3.curveBumpX)
          .x((d) => d[0])
          .y((d, j) => d[1] - (j % 2 === 0 ? 0 : 6));
        g.append("path")
          .attr("class", "lineup-curve")
          .attr("data-player", row.player)
          .attr("d", line(points) ?? "")
          .attr("fill", "none")
          .attr("stroke", "#444444");
      }
    });
  }
}
