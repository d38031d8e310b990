// Payload shapes served by /api/v1. The client renders these verbatim and
// never recomputes metrics.

export type Channel = "social" | "gameplay" | "avatar" | "baseline";

export const CHANNELS: Channel[] = ["social", "gameplay", "avatar", "baseline"];

export interface GuidanceStep {
  step: string;
  status: "completed" | "active" | "future";
}

export interface HexBin {
  q: number;
  r: number;
  count: number;
  members: number[];
  channel_means: Record<string, number>;
}

export interface HexGrid {
  radius: number;
  bins: HexBin[];
}

export interface ProjectionPayload {
  channel: string;
  hexbins: HexGrid;
  projection: {
    positions: Record<string, [number, number]>;
    kl_final: number;
    perplexity: number;
  };
}

export interface GroupPlayer {
  player: number;
  attributes: Record<string, number>;
  displayed_avatar: number | null;
}

export interface GroupPayload {
  group_size: number;
  attributes: string[];
  players: GroupPlayer[];
  ranges: Record<string, [number, number]>;
  guidance: GuidanceStep[];
}

export interface RadialPoint {
  angle: number;
  radius: number;
}

export interface SampleChannelPayload {
  layout: {
    ring_radii: number[];
    points: Record<string, RadialPoint>;
  };
  band_sizes: number[];
  sampled: [number, number][];
  sampled_count: number;
  content_diversity: number;
  entries: [number, number][];
}

export interface SamplePayload {
  channels: Record<string, SampleChannelPayload>;
  guidance: GuidanceStep[];
}

export interface FusedEntryPayload {
  player: number;
  sims: Record<string, number>;
  members: string[];
  radius: number;
}

export interface FusePayload {
  entries: FusedEntryPayload[];
  positions: Record<string, [number, number]>;
  fused_count: number;
  target_size: number;
  guidance: GuidanceStep[];
}

export interface SDMetrics {
  content_diversity: number;
  total_sim: number;
  fri_sim: number;
}

export interface QualityMetrics {
  recall: number;
  precision: number;
  f1: number;
  hit_rate: number;
}

export interface LineupRow {
  rank: number;
  player: number;
  probability: number;
  members: string[];
  sims: Record<string, number>;
  channel_ranks: Record<string, number | null>;
  total_sim: number;
  fri_sim: number;
  displayed_avatar: number | null;
}

export interface RatioTableRow {
  row_id: number;
  representative: number;
  intra: Record<string, number[]>;
  inter: Record<string, number>;
  seed: number | null;
  n: number;
  sd: SDMetrics;
  quality: QualityMetrics;
  fingerprint: string;
}

export interface RankPayload {
  ranked: [number, number][];
  sd: SDMetrics;
  quality: QualityMetrics;
  lineup: LineupRow[];
  ratio_table: RatioTableRow[];
  guidance: GuidanceStep[];
}

export interface UncertainRow {
  player: number;
  probabilities: Record<string, number>;
  uncertainty: number;
}

export interface UncertainPayload {
  rows: UncertainRow[];
  ratio_ids: string[];
}

export interface IterationRecord {
  iteration: number;
  group_id: string;
  sd: SDMetrics;
  quality: QualityMetrics;
  ratio_assignment: Record<string, string>;
}

export interface HistoryPayload {
  records: IterationRecord[];
}

export interface SessionSnapshot {
  session_id: string;
  dataset_id: string;
  state: string;
  group: number[];
  representatives: number[];
  assignments: Record<string, string>;
  ratios: Record<string, unknown>;
  ratio_table: RatioTableRow[];
  history: IterationRecord[];
}
