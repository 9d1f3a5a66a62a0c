/** App wiring: model picker, covariate form, and the live panels. */

import { ServiceApi } from "./api.js";
import {
  importanceBars,
  renderCurvePanel,
  renderGauge,
  renderRadar,
} from "./charts.js";
import { WhatIfStore } from "./store.js";
import type { StoreState } from "./store.js";
import type { ModelDescriptor } from "./types.js";
import { buildPatientForm } from "./widgets.js";

function apiBaseUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? "http://127.0.0.1:8000";
}

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function renderPanels(state: StoreState, model: ModelDescriptor): void {
  const banner = byId("banner");
  banner.textContent = state.status === "error"
    ? `service error: ${state.errorMessage ?? "unknown"}` : "";
  banner.classList.toggle("visible", state.status === "error");
  byId("retry").classList.toggle("visible", state.status === "error");
  byId("spinner").classList.toggle("visible", state.status === "loading");
  if (!state.panels) return;
  const { predict, radar, pdp, neighbors } = state.panels;

  const gauge = byId("gauge");
  gauge.replaceChildren(renderGauge(
    predict.probabilities[predict.probabilities.length - 1],
    0.5,
    `P(${model.classes[model.classes.length - 1]})`,
  ));
  byId("predicted-class").textContent =
    `predicted: ${predict.predicted_class}`;

  const series = [
    { values: radar.features.map(() => radar.baseline), className: "baseline" },
    { values: radar.axes, className: "patient" },
  ];
  if (radar.neighbor_axes) {
    series.splice(1, 0, { values: radar.neighbor_axes, className: "neighbor" });
  }
  byId("radar").replaceChildren(renderRadar(radar.features, series));

  const grid = byId("pdp-grid");
  grid.replaceChildren(...pdp.curves.map((curve) => renderCurvePanel(
    curve.feature, curve.grid, curve.values,
    { patient: curve.patient, cohort: curve.cohort, neighbors: curve.neighbors },
  )));

  const table = byId("neighbor-table") as HTMLTableElement;
  const cols = model.features.map((f) => f.name);
  const header = `<tr>${cols.map((c) => `<th>${c}</th>`).join("")}` +
    "<th>P(positive)</th><th>label</th></tr>";
  const rows = neighbors.neighbors.map((n) =>
    `<tr>${cols.map((c) => `<td>${n.covariates[c]}</td>`).join("")}` +
    `<td>${n.probability.toFixed(3)}</td><td>${n.true_label ?? ""}</td></tr>`);
  table.innerHTML = header + rows.join("");

  if (state.importance) {
    const bars = importanceBars(state.importance.features,
                                state.importance.shares, 240);
    byId("importance").replaceChildren(...bars.slice(0, 15).map((bar) => {
      const row = document.createElement("div");
      row.className = "importance-row";
      row.innerHTML =
        `<span class="importance-name">${bar.feature}</span>` +
        `<span class="importance-bar" style="width:${bar.width}px"></span>` +
        `<span class="importance-value">${bar.share.toFixed(3)}</span>`;
      return row;
    }));
  }
}

async function boot(): Promise<void> {
  const api = new ServiceApi(apiBaseUrl());
  const listing = await api.models();
  const picker = byId("model-picker") as HTMLSelectElement;
  for (const model of listing.models) {
    const option = document.createElement("option");
    option.value = model.id;
    option.textContent = `${model.id} (${model.kind})`;
    picker.append(option);
  }

  let store: WhatIfStore | null = null;

  const mount = async (model: ModelDescriptor) => {
    store = new WhatIfStore(api, model);
    byId("form").replaceChildren(buildPatientForm(model.features, store));
    store.subscribe((state) => renderPanels(state, model));
    byId("reset").onclick = () => store?.reset();
    byId("retry").onclick = () => store?.retry();
    (byId("neighbor-toggle") as HTMLInputElement).onchange = (ev) =>
      store?.setNeighborPolygon((ev.target as HTMLInputElement).checked);
    await store.initialize();
  };

  picker.onchange = () => {
    const model = listing.models.find((m) => m.id === picker.value);
    if (model) void mount(model);
  };
  if (listing.models.length > 0) await mount(listing.models[0]);
}

void boot().catch((err) => {
  byId("banner").textContent = `failed to start: ${err}`;
  byId("banner").classList.add("visible");
});
