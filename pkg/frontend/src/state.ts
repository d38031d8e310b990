// Client-side view state: selections, slider values, and the current
// guidance step. Holds no recommendation logic; every number shown in a view
// comes from an API payload.

import type { Channel, GuidanceStep } from "./types";

export type Listener = () => void;

export class ViewState {
  sessionId: string | null = null;
  datasetId: string | null = null;
  step = "1.1";
  guidance: GuidanceStep[] = [];

  selectedBins: Partial<Record<Channel, [number, number][]>> = {};
  brushedRanges: Record<string, [number, number]> = {};
  representative: number | null = null;
  // players promoted from the uncertainty table for re-mediation
  promoted: number[] = [];
  representatives: number[] = [];

  // slider values (committed)
  freqs: Partial<Record<Channel, [number, number, number, number]>> = {};
  weights: Partial<Record<Channel, number>> = {};
  sampleSeed = 0;

  hoveredPlayers: Set<number> = new Set();

  private listeners: Listener[] = [];

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  notify(): void {
    for (const listener of this.listeners) listener();
  }

  setGuidance(guidance: GuidanceStep[]): void {
    this.guidance = guidance;
    const active = guidance.find((g) => g.status === "active");
    if (active) this.step = active.step;
    this.notify();
  }

  stepAllows(operation: string): boolean {
    const allowed: Record<string, string[]> = {
      group: ["1.1"],
      representative: ["1.2", "1.4"],
      sample: ["1.3", "1.4"],
      fuse: ["1.3", "1.4"],
      rank: ["1.3", "1.4"],
      assign: ["1.4"],
      propagate: ["1.2", "1.4", "2.2"],
      remediate: ["2.2"],
    };
    return (allowed[operation] ?? []).includes(this.step);
  }

  promote(player: number): void {
    if (!this.promoted.includes(player)) this.promoted.push(player);
    if (!this.representatives.includes(player)) this.representatives.push(player);
    this.notify();
  }

  setWeights(weights: Record<string, number>): void {
    this.weights = { ...weights } as Partial<Record<Channel, number>>;
  }

  // inter weights renormalise to sum 1 when a slider is released
  renormalisedWeights(changed: Channel, value: number): Record<string, number> {
    const entries = Object.entries(this.weights) as [Channel, number][];
    const others = entries.filter(([c]) => c !== changed);
    const otherTotal = others.reduce((acc, [, w]) => acc + w, 0);
    const result: Record<string, number> = {};
    const clamped = Math.min(Math.max(value, 0), 1);
    result[changed] = clamped;
    const remaining = 1 - clamped;
    for (const [c, w] of others) {
      result[c] = otherTotal > 0 ? (w / otherTotal) * remaining : remaining / others.length;
    }
    return result;
  }
}
