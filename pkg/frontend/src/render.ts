/** Canvas painters.  All scene math lives in axono/scatter; this file
 * only walks their output and issues fills. */

import { Quad, sceneQuads } from "./axono.js";
import { depthToRgba } from "./field.js";
import { ScatterLayout } from "./scatter.js";
import { GRID_N, Obstruction } from "./types.js";

function gray(shade: number): string {
  const g = Math.round(40 + shade * 200);
  return `rgb(${g},${g},${g})`;
}

function fillQuad(ctx: CanvasRenderingContext2D, q: Quad): void {
  ctx.beginPath();
  ctx.moveTo(q.pts[0].x, q.pts[0].y);
  for (let i = 1; i < 4; i++) ctx.lineTo(q.pts[i].x, q.pts[i].y);
  ctx.closePath();
  ctx.fillStyle = q.kind === "ground" ? "#202830" : gray(q.shade);
  ctx.fill();
  if (q.kind !== "ground") {
    ctx.strokeStyle = "rgba(0,0,0,0.35)";
    ctx.lineWidth = 0.6;
    ctx.stroke();
  }
}

export function drawScene(
  canvas: HTMLCanvasElement,
  heights: number[][],
  obstructions: Obstruction[],
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.save();
  ctx.translate(canvas.width * 0.5, canvas.height * 0.62);
  const scale = canvas.width / 52;
  for (const q of sceneQuads(heights, obstructions, scale)) fillQuad(ctx, q);
  ctx.restore();
}

export function drawDepthTile(
  canvas: HTMLCanvasElement,
  pixels: number[][],
): void {
  const h = pixels.length;
  const w = pixels[0].length;
  const off = document.createElement("canvas");
  off.width = w;
  off.height = h;
  const octx = off.getContext("2d");
  const ctx = canvas.getContext("2d");
  if (!octx || !ctx) return;
  octx.putImageData(new ImageData(depthToRgba(pixels), w, h), 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
}

export function drawSketch(
  canvas: HTMLCanvasElement,
  sketch: number[][],
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const cw = canvas.width / GRID_N;
  const ch = canvas.height / GRID_N;
  for (let i = 0; i < GRID_N; i++) {
    for (let j = 0; j < GRID_N; j++) {
      const g = Math.round((sketch[i][j] / 10) * 220) + 20;
      ctx.fillStyle = `rgb(${g},${Math.round(g * 0.85)},${60})`;
      ctx.fillRect(j * cw, i * ch, cw, ch);
      ctx.strokeStyle = "#11151a";
      ctx.strokeRect(j * cw, i * ch, cw, ch);
      ctx.fillStyle = sketch[i][j] > 5 ? "#11151a" : "#dbe2ea";
      ctx.font = `${Math.round(ch * 0.3)}px system-ui`;
      ctx.textAlign = "center";
      ctx.textBaseline = "middle";
      ctx.fillText(String(sketch[i][j]), (j + 0.5) * cw, (i + 0.5) * ch);
    }
  }
}

export function drawScatter(
  canvas: HTMLCanvasElement,
  layout: ScatterLayout,
  selected: number | null,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#3a4450";
  ctx.fillStyle = "#8a96a3";
  ctx.font = "10px system-ui";
  for (const t of layout.xTicks) {
    ctx.beginPath();
    ctx.moveTo(t.pos, 0);
    ctx.lineTo(t.pos, canvas.height - 16);
    ctx.stroke();
    ctx.textAlign = "center";
    ctx.fillText(t.label, t.pos, canvas.height - 5);
  }
  for (const t of layout.yTicks) {
    ctx.beginPath();
    ctx.moveTo(26, t.pos);
    ctx.lineTo(canvas.width, t.pos);
    ctx.stroke();
    ctx.textAlign = "left";
    ctx.fillText(t.label, 2, t.pos - 2);
  }
  for (const p of layout.points) {
    ctx.beginPath();
    ctx.arc(p.px, p.py, p.index === selected ? 6 : 3.5, 0, Math.PI * 2);
    ctx.fillStyle = p.index === selected ? "#ffb454" : "#57a6ff";
    ctx.fill();
  }
}
