/** Studio bootstrap: DOM wiring around the pure modules. */

import { ApiClient, ApiError, isAbort } from "./api.js";
import { fieldToSketch } from "./field.js";
import { tileModel } from "./gallery.js";
import { drawDepthTile, drawScatter, drawScene, drawSketch } from "./render.js";
import { scatterLayout } from "./scatter.js";
import { hitCell, paintCell } from "./sketch.js";
import {
  decodeHash,
  defaultState,
  encodeHash,
  hasBc,
  obstructionsOf,
  setSlot,
} from "./state.js";
import { ToastQueue, toastText } from "./toast.js";
import { Candidate, SIDES, Side, StudioState } from "./types.js";

const api = new ApiClient("");
const toasts = new ToastQueue();

let state: StudioState = decodeHash(location.hash) ?? defaultState();
let gallery: Candidate[] = [];
let brush = 5;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const sceneCanvas = el<HTMLCanvasElement>("scene");
const sketchCanvas = el<HTMLCanvasElement>("sketch");
const scatterCanvas = el<HTMLCanvasElement>("scatter");
const galleryDiv = el<HTMLDivElement>("gallery");
const toastDiv = el<HTMLDivElement>("toasts");
const statusSpan = el<HTMLSpanElement>("status");
const evalSpan = el<HTMLSpanElement>("eval-result");

function update(next: StudioState): void {
  state = next;
  history.replaceState(null, "", encodeHash(state));
  render();
}

function fail(err: unknown): void {
  if (isAbort(err)) return;
  if (err instanceof ApiError) toasts.push(err.message, err.status);
  else toasts.push(String(err));
  renderToasts();
}

function renderToasts(): void {
  toastDiv.replaceChildren(
    ...toasts.active().map((t) => {
      const d = document.createElement("div");
      d.className = "toast";
      d.textContent = toastText(t);
      d.onclick = () => {
        toasts.dismiss(t.id);
        renderToasts();
      };
      return d;
    }),
  );
}

function renderGallery(): void {
  galleryDiv.replaceChildren(
    ...gallery.map((c, i) => {
      const m = tileModel(c, i);
      const tile = document.createElement("div");
      tile.className =
        "tile" +
        (state.selected === i ? " selected" : "") +
        (m.degenerate ? " degenerate" : "");
      const canvas = document.createElement("canvas");
      canvas.width = 96;
      canvas.height = 96;
      drawDepthTile(canvas, c.depth_map);
      const head = document.createElement("div");
      head.className = "tile-head";
      head.textContent = m.title;
      tile.append(head, canvas);
      for (const metric of m.metrics) {
        const row = document.createElement("div");
        row.className = "metric";
        row.textContent = `${metric.label}: ${metric.value}`;
        tile.append(row);
      }
      tile.onclick = () => update({ ...state, selected: i });
      return tile;
    }),
  );
}

function render(): void {
  for (const side of SIDES) {
    const sel = el<HTMLSelectElement>(`slot-${side}`);
    sel.value = state.slots[side] === null ? "none" : String(state.slots[side]);
  }
  el<HTMLInputElement>("lambda").value = String(state.lambda);
  el<HTMLSpanElement>("lambda-value").textContent = state.lambda.toFixed(1);
  el<HTMLInputElement>("count").value = String(state.count);
  el<HTMLInputElement>("seed").value = String(state.seed);
  el<HTMLInputElement>("brush").value = String(brush);
  el<HTMLSpanElement>("brush-value").textContent = brush.toFixed(1);
  el<HTMLButtonElement>("adopt").disabled =
    state.selected === null || !gallery[state.selected ?? -1];

  const chosen = state.selected !== null ? gallery[state.selected] : undefined;
  const heights = chosen ? chosen.heightfield.grid : state.sketch;
  drawScene(sceneCanvas, heights, obstructionsOf(state));
  drawSketch(sketchCanvas, state.sketch);
  drawScatter(
    scatterCanvas,
    scatterLayout(gallery, scatterCanvas.width, scatterCanvas.height),
    state.selected,
  );
  renderGallery();
  renderToasts();
}

function generate(): void {
  if (!hasBc(state)) {
    toasts.push("place at least one obstruction before generating");
    renderToasts();
    return;
  }
  statusSpan.textContent = "generating…";
  api
    .generate({
      obstructions: obstructionsOf(state),
      count: state.count,
      seed: state.seed,
      guidance:
        state.lambda > 0
          ? { heightmap: state.sketch, lambda: state.lambda }
          : null,
    })
    .then((res) => {
      gallery = res.results;
      statusSpan.textContent = `${res.results.length} candidates for bc ${res.bc.id}`;
      update({ ...state, selected: null });
    })
    .catch((err) => {
      statusSpan.textContent = "";
      fail(err);
    });
}

function evaluateSketch(): void {
  evalSpan.textContent = "…";
  api
    .evaluate(state.sketch, obstructionsOf(state))
    .then((res) => {
      const r = res.radiation === null ? "n/a" : res.radiation.toFixed(3);
      const v = res.volume === null ? "n/a" : res.volume.toFixed(2);
      const j = res.j === null ? "n/a" : res.j.toFixed(3);
      evalSpan.textContent = `radiation ${r} | volume ${v} | J ${j}`;
    })
    .catch((err) => {
      evalSpan.textContent = "";
      fail(err);
    });
}

function adopt(): void {
  const chosen = state.selected !== null ? gallery[state.selected] : undefined;
  if (!chosen) return;
  update({ ...state, sketch: fieldToSketch(chosen.heightfield) });
}

function wire(): void {
  for (const side of SIDES) {
    const sel = el<HTMLSelectElement>(`slot-${side}`);
    sel.onchange = () =>
      update(
        setSlot(
          state,
          side as Side,
          sel.value === "none" ? null : Number(sel.value),
        ),
      );
  }
  el<HTMLInputElement>("lambda").oninput = (e) =>
    update({ ...state, lambda: Number((e.target as HTMLInputElement).value) });
  el<HTMLInputElement>("count").onchange = (e) =>
    update({
      ...state,
      count: Math.min(100, Math.max(1, Number((e.target as HTMLInputElement).value) || 20)),
    });
  el<HTMLInputElement>("seed").onchange = (e) =>
    update({ ...state, seed: Math.round(Number((e.target as HTMLInputElement).value) || 0) });
  el<HTMLInputElement>("brush").oninput = (e) => {
    brush = Number((e.target as HTMLInputElement).value);
    render();
  };
  el<HTMLButtonElement>("generate").onclick = generate;
  el<HTMLButtonElement>("evaluate").onclick = evaluateSketch;
  el<HTMLButtonElement>("adopt").onclick = adopt;
  el<HTMLButtonElement>("clear-sketch").onclick = () =>
    update({ ...state, sketch: defaultState().sketch });

  let painting = false;
  const paintAt = (ev: MouseEvent) => {
    const rect = sketchCanvas.getBoundingClientRect();
    const hit = hitCell(
      ((ev.clientX - rect.left) / rect.width) * sketchCanvas.width,
      ((ev.clientY - rect.top) / rect.height) * sketchCanvas.height,
      sketchCanvas.width,
      sketchCanvas.height,
    );
    if (hit) update(paintCell(state, hit, brush));
  };
  sketchCanvas.onmousedown = (ev) => {
    painting = true;
    paintAt(ev);
  };
  sketchCanvas.onmousemove = (ev) => {
    if (painting) paintAt(ev);
  };
  window.addEventListener("mouseup", () => {
    painting = false;
  });
  window.addEventListener("hashchange", () => {
    const restored = decodeHash(location.hash);
    if (restored) {
      state = restored;
      render();
    }
  });

  api
    .modelInfo()
    .then((info) => {
      statusSpan.textContent =
        `model: ${info.latent_dim}d latent, ${info.param_count} params` +
        (info.checkpoint_crc ? `, crc ${info.checkpoint_crc}` : "");
    })
    .catch(fail);
}

wire();
render();
