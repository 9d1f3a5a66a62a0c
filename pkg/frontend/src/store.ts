/** What-if state machine.
 *
 * Edits are debounced; each committed edit takes one covariate snapshot and
 * fetches prediction, radar, dependence curves, and neighbors together, so
 * every panel on screen always reflects the same snapshot. Responses for a
 * snapshot that is no longer the latest are discarded, never rendered.
 */

import { ApiError, ServiceApi } from "./api.js";
import type {
  Covariates,
  CovariateValue,
  FeatureDescriptor,
  ImportanceResponse,
  ModelDescriptor,
  PanelData,
} from "./types.js";

export type Status = "idle" | "loading" | "error";

export interface StoreState {
  covariates: Covariates;
  dirty: Set<string>;
  panels: PanelData | null;
  importance: ImportanceResponse | null;
  status: Status;
  errorMessage: string | null;
  fieldErrors: Record<string, string>;
}

export interface StoreOptions {
  debounceMs?: number;
  neighborCount?: number;
  includeNeighborPolygon?: boolean;
  pdpFeatures?: string[];
}

/** Sensible starting patient: zeros/first category/range midpoint. */
export function defaultCovariates(features: FeatureDescriptor[]): Covariates {
  const out: Covariates = {};
  for (const f of features) {
    if (f.kind === "categorical") {
      out[f.name] = f.categories?.[0] ?? "";
    } else if (f.kind === "binary") {
      out[f.name] = 0;
    } else {
      const lo = f.min ?? 0;
      const hi = f.max ?? 1;
      const mid = (lo + hi) / 2;
      out[f.name] = f.kind === "integer" ? Math.round(mid) : mid;
    }
  }
  return out;
}

function parseFieldErrors(detail: unknown): Record<string, string> {
  // the service phrases validation problems as "name: problem" chunks
  const errors: Record<string, string> = {};
  if (typeof detail !== "string") return errors;
  for (const chunk of detail.split(";")) {
    const m = chunk.match(/^\s*([^:]+):\s*(.+)$/);
    if (m && !m[1].includes(" ")) errors[m[1]] = m[2];
  }
  return errors;
}

export class WhatIfStore {
  readonly state: StoreState;
  /** snapshot ids whose responses were actually applied, in order */
  readonly appliedSnapshots: number[] = [];
  /** number of refresh cycles issued (instrumentation for debounce tests) */
  requestCount = 0;

  private readonly initial: Covariates;
  private latestSnapshot = 0;
  private pendingTimer: ReturnType<typeof setTimeout> | null = null;
  private inflight: Promise<void> | null = null;
  private listeners: Array<(state: StoreState) => void> = [];
  private readonly debounceMs: number;
  private readonly neighborCount: number;
  private includeNeighborPolygon: boolean;
  private readonly pdpFeatures: string[] | undefined;

  constructor(
    private readonly api: ServiceApi,
    readonly model: ModelDescriptor,
    initialCovariates?: Covariates,
    options: StoreOptions = {},
  ) {
    this.initial = { ...(initialCovariates
      ?? defaultCovariates(model.features)) };
    this.debounceMs = options.debounceMs ?? 250;
    this.neighborCount = options.neighborCount ?? 5;
    this.includeNeighborPolygon = options.includeNeighborPolygon ?? false;
    this.pdpFeatures = options.pdpFeatures;
    this.state = {
      covariates: { ...this.initial },
      dirty: new Set(),
      panels: null,
      importance: null,
      status: "idle",
      errorMessage: null,
      fieldErrors: {},
    };
  }

  subscribe(listener: (state: StoreState) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  /** First load: importance (static per model) plus the initial snapshot. */
  async initialize(): Promise<void> {
    try {
      this.state.importance = await this.api.importance(this.model.id);
    } catch (err) {
      this.fail(err);
      return;
    }
    await this.commit();
  }

  setCovariate(name: string, value: CovariateValue): void {
    this.state.covariates[name] = value;
    if (value === this.initial[name]) {
      this.state.dirty.delete(name);
    } else {
      this.state.dirty.add(name);
    }
    this.notify();
    this.schedule();
  }

  reset(): void {
    this.state.covariates = { ...this.initial };
    this.state.dirty = new Set();
    this.notify();
    this.schedule();
  }

  setNeighborPolygon(on: boolean): void {
    this.includeNeighborPolygon = on;
    this.schedule();
  }

  retry(): void {
    this.schedule();
  }

  private schedule(): void {
    if (this.pendingTimer !== null) clearTimeout(this.pendingTimer);
    this.pendingTimer = setTimeout(() => {
      this.pendingTimer = null;
      void this.commit();
    }, this.debounceMs);
  }

  /** Run any pending refresh immediately and wait for the cycle to finish. */
  async flush(): Promise<void> {
    if (this.pendingTimer !== null) {
      clearTimeout(this.pendingTimer);
      this.pendingTimer = null;
      await this.commit();
      return;
    }
    if (this.inflight) await this.inflight;
  }

  private commit(): Promise<void> {
    const id = ++this.latestSnapshot;
    const snapshot: Covariates = { ...this.state.covariates };
    this.requestCount += 1;
    this.state.status = "loading";
    this.notify();
    const cycle = this.fetchPanels(id, snapshot);
    this.inflight = cycle;
    return cycle;
  }

  private async fetchPanels(id: number, snapshot: Covariates): Promise<void> {
    try {
      const [predict, radar, pdp, neighbors] = await Promise.all([
        this.api.predict(this.model.id, snapshot),
        this.api.radar(this.model.id, snapshot, this.includeNeighborPolygon),
        this.api.pdp(this.model.id, snapshot, this.pdpFeatures),
        this.api.neighbors(this.model.id, snapshot, this.neighborCount),
      ]);
      if (id !== this.latestSnapshot) return; // stale: never rendered
      this.state.panels = { predict, radar, pdp, neighbors };
      this.appliedSnapshots.push(id);
      this.state.status = "idle";
      this.state.errorMessage = null;
      this.state.fieldErrors = {};
      this.notify();
    } catch (err) {
      if (id !== this.latestSnapshot) return; // stale failures stay silent
      this.fail(err);
    }
  }

  private fail(err: unknown): void {
    this.state.status = "error";
    if (err instanceof ApiError && err.isValidation) {
      this.state.fieldErrors = parseFieldErrors(err.detail);
      this.state.errorMessage =
        typeof err.detail === "string" ? err.detail : "invalid covariates";
    } else {
      this.state.fieldErrors = {};
      this.state.errorMessage = err instanceof Error ? err.message : String(err);
    }
    this.notify();
  }
}
