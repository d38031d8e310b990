// Application shell: wires the six views to the HTTP API. All recommendation
// numbers come from API payloads; gestures map 1:1 onto endpoints and queue
// while a mutation is pending.

import { ApiClient } from "./api";
import { ViewState } from "./state";
import { CHANNELS, type Channel, type GroupPayload, type ProjectionPayload } from "./types";
import { AdjustmentView } from "./views/adjustment";
import { ComparisonView } from "./views/comparison";
import { GuidanceView } from "./views/guidance";
import { NoticeArea } from "./views/notices";
import { ProjectionView } from "./views/projection";
import { PropagationView } from "./views/propagation";
import { RepresentativesView } from "./views/representatives";

interface GuidedPayload {
  guidance?: { step: string; status: "completed" | "active" | "future" }[];
}

export class App {
  api: ApiClient;
  state = new ViewState();
  notices: NoticeArea;
  guidance: GuidanceView;
  projection: ProjectionView;
  representatives: RepresentativesView;
  adjustment: AdjustmentView;
  propagation: PropagationView;
  comparison: ComparisonView;

  constructor(root: HTMLElement, api = new ApiClient()) {
    this.api = api;
    const section = (cls: string) => {
      const el = document.createElement("section");
      el.className = cls;
      root.appendChild(el);
      return el;
    };
    this.notices = new NoticeArea(section("notices"));
    this.guidance = new GuidanceView(section("guidance"));
    this.projection = new ProjectionView(section("projection"), this.state, () =>
      this.commitGroup(),
    );
    this.representatives = new RepresentativesView(
      section("representatives"),
      this.state,
      (player) => this.pickRepresentative(player),
    );
    this.adjustment = new AdjustmentView(section("adjustment"), this.state, {
      onSample: (freqs, seed) => this.sample(freqs, seed),
      onFuse: (weights) => this.fuse(weights),
      onRank: (n) => this.rank(n),
      onAssign: () => this.assign(),
    });
    this.propagation = new PropagationView(section("propagation"), this.state, () => {
      // promotion is local; the expert mediates then remediate() commits
    });
    this.comparison = new ComparisonView(section("comparison"));

    const controls = section("controls");
    const propagateButton = document.createElement("button");
    propagateButton.className = "propagate-button";
    propagateButton.textContent = "Propagate";
    propagateButton.addEventListener("click", () => this.propagate());
    controls.appendChild(propagateButton);
  }

  private applyGuidance(payload: GuidedPayload): void {
    if (payload.guidance) {
      this.state.setGuidance(payload.guidance);
      this.guidance.render(payload.guidance);
      this.adjustment.refreshGating();
    }
  }

  private guard<T>(promise: Promise<T>): Promise<T | undefined> {
    return promise.catch((error) => {
      this.notices.show(error);
      return undefined;
    });
  }

  async loadSynthetic(config: Record<string, unknown>): Promise<void> {
    const ds = await this.guard(
      this.api.post<{ dataset_id: string }>("/datasets", { synthetic: config }),
    );
    if (!ds) return;
    this.state.datasetId = ds.dataset_id;
    const session = await this.guard(
      this.api.post<{ session_id: string; guidance: GuidedPayload["guidance"] }>(
        "/sessions",
        { dataset_id: ds.dataset_id },
      ),
    );
    if (!session) return;
    this.state.sessionId = session.session_id;
    this.applyGuidance(session);
    const payloads: Partial<Record<Channel, ProjectionPayload>> = {};
    for (const channel of CHANNELS) {
      const payload = await this.guard(
        this.api.get<ProjectionPayload>(
          `/datasets/${ds.dataset_id}/projection/${channel}`,
        ),
      );
      if (payload) payloads[channel] = payload;
    }
    this.projection.render(payloads);
  }

  async commitGroup(): Promise<void> {
    if (!this.state.stepAllows("group")) return;
    const bins = this.state.selectedBins;
    if (!Object.values(bins).some((b) => b && b.length)) return;
    const payload = await this.guard(
      this.api.post<GroupPayload>(`/sessions/${this.state.sessionId}/group`, { bins }),
    );
    if (!payload) return;
    this.applyGuidance(payload);
    this.representatives.render(payload);
  }

  async pickRepresentative(player: number): Promise<void> {
    const payload = await this.guard(
      this.api.post<GuidedPayload>(
        `/sessions/${this.state.sessionId}/representative`,
        { player },
      ),
    );
    if (!payload) return;
    this.state.representative = player;
    if (!this.state.representatives.includes(player)) {
      this.state.representatives.push(player);
    }
    this.applyGuidance(payload);
    this.representatives.renderRepTable();
  }

  async sample(freqs: Record<string, number[]>, seed: number): Promise<void> {
    const payload = await this.guard(
      this.api.post<import("./types").SamplePayload & GuidedPayload>(
        `/sessions/${this.state.sessionId}/sample`,
        { freqs, seed },
      ),
    );
    if (!payload) return;
    this.applyGuidance(payload);
    this.adjustment.renderSample(payload);
  }

  async fuse(weights: Record<string, number>): Promise<void> {
    const payload = await this.guard(
      this.api.post<import("./types").FusePayload & GuidedPayload>(
        `/sessions/${this.state.sessionId}/fuse`,
        { weights },
      ),
    );
    if (!payload) return;
    this.applyGuidance(payload);
    this.adjustment.renderFuse(payload);
  }

  async rank(n?: number): Promise<void> {
    const payload = await this.guard(
      this.api.post<import("./types").RankPayload & GuidedPayload>(
        `/sessions/${this.state.sessionId}/rank`,
        n === undefined ? {} : { n },
      ),
    );
    if (!payload) return;
    this.applyGuidance(payload);
    this.adjustment.renderRank(payload);
  }

  async assign(): Promise<void> {
    const payload = await this.guard(
      this.api.post<GuidedPayload>(`/sessions/${this.state.sessionId}/assign`, {}),
    );
    if (!payload) return;
    this.applyGuidance(payload);
  }

  async propagate(): Promise<void> {
    const poll = window.setInterval(async () => {
      const job = await this.guard(
        this.api.get<{ name: string | null; progress: number }>(
          `/sessions/${this.state.sessionId}/progress`,
        ),
      );
      if (job?.name) {
        document.body.setAttribute("data-job-progress", String(job.progress));
      }
    }, 500);
    try {
      const payload = await this.guard(
        this.api.post<GuidedPayload>(`/sessions/${this.state.sessionId}/propagate`),
      );
      if (!payload) return;
      this.applyGuidance(payload);
      await this.refreshEvaluation();
    } finally {
      window.clearInterval(poll);
      document.body.removeAttribute("data-job-progress");
    }
  }

  async refreshEvaluation(): Promise<void> {
    const uncertain = await this.guard(
      this.api.get<import("./types").UncertainPayload>(
        `/sessions/${this.state.sessionId}/uncertain?k=10`,
      ),
    );
    if (uncertain) this.propagation.render(uncertain);
    const history = await this.guard(
      this.api.get<import("./types").HistoryPayload>(
        `/sessions/${this.state.sessionId}/history`,
      ),
    );
    if (history) this.comparison.render(history);
  }

  async remediate(player: number, ratio: unknown): Promise<void> {
    const payload = await this.guard(
      this.api.post<GuidedPayload>(`/sessions/${this.state.sessionId}/remediate`, {
        player,
        ratio,
      }),
    );
    if (!payload) return;
    this.applyGuidance(payload);
    await this.refreshEvaluation();
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const app = new App(document.getElementById("app") as HTMLElement);
  app.loadSynthetic({ n_players: 300, n_groups: 3, seed: 7 });
}
