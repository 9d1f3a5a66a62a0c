/** Covariate form widgets, one per feature kind.
 *
 * The form can only emit schema-valid values: binaries are toggles,
 * categoricals are selects over the model's vocabulary, numerics are
 * slider+input pairs clamped to the observed range.
 */

import type { CovariateValue, FeatureDescriptor } from "./types.js";
import type { WhatIfStore } from "./store.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: Array<HTMLElement | string> = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  for (const child of children) node.append(child);
  return node;
}

function numericStep(f: FeatureDescriptor): number {
  if (f.kind === "integer") return 1;
  const span = (f.max ?? 1) - (f.min ?? 0);
  return span > 0 ? span / 100 : 0.01;
}

export function buildFieldWidget(
  feature: FeatureDescriptor,
  value: CovariateValue,
  onChange: (value: CovariateValue) => void,
): HTMLElement {
  const row = el("div", { class: "field", "data-feature": feature.name });
  row.append(el("label", { class: "field-name" }, [feature.name]));

  if (feature.kind === "binary") {
    const box = el("input", { type: "checkbox", class: "field-toggle" });
    box.checked = Number(value) === 1;
    box.addEventListener("change", () => onChange(box.checked ? 1 : 0));
    row.append(box);
  } else if (feature.kind === "categorical") {
    const select = el("select", { class: "field-select" });
    for (const cat of feature.categories ?? []) {
      const option = el("option", { value: cat }, [cat]);
      if (cat === String(value)) option.selected = true;
      select.append(option);
    }
    select.addEventListener("change", () => onChange(select.value));
    row.append(select);
  } else {
    const lo = feature.min ?? 0;
    const hi = feature.max ?? 1;
    const step = numericStep(feature);
    const slider = el("input", {
      type: "range", min: String(lo), max: String(hi), step: String(step),
      class: "field-slider",
    });
    const box = el("input", {
      type: "number", min: String(lo), max: String(hi), step: String(step),
      class: "field-number",
    });
    slider.value = String(value);
    box.value = String(value);
    const emit = (raw: string) => {
      let v = Number(raw);
      if (!Number.isFinite(v)) return;
      v = Math.max(lo, Math.min(hi, v));
      if (feature.kind === "integer") v = Math.round(v);
      slider.value = String(v);
      box.value = String(v);
      onChange(v);
    };
    slider.addEventListener("input", () => emit(slider.value));
    box.addEventListener("change", () => emit(box.value));
    row.append(slider, box);
  }
  row.append(el("span", { class: "field-error" }));
  return row;
}

export function buildPatientForm(
  features: FeatureDescriptor[],
  store: WhatIfStore,
): HTMLElement {
  const form = el("div", { class: "patient-form" });
  for (const feature of features) {
    form.append(buildFieldWidget(
      feature,
      store.state.covariates[feature.name],
      (value) => store.setCovariate(feature.name, value),
    ));
  }
  store.subscribe((state) => {
    for (const row of form.querySelectorAll<HTMLElement>(".field")) {
      const name = row.dataset.feature ?? "";
      row.classList.toggle("dirty", state.dirty.has(name));
      const note = row.querySelector<HTMLElement>(".field-error");
      if (note) note.textContent = state.fieldErrors[name] ?? "";
    }
  });
  return form;
}
