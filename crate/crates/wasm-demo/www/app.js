import init, { simulate_thresholds, lr_curve, MixExplorer } from './pkg/pepl_wasm_demo.js';

const SCALE = 6;
const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function plot(canvas, series, { ymin = 0, ymax = 1, log = false } = {}) {
  const ctx = canvas.getContext('2d');
  const { width: w, height: h } = canvas;
  const pad = 36;
  ctx.clearRect(0, 0, w, h);
  const fy = log
    ? (v) => Math.log10(Math.max(v, ymin))
    : (v) => v;
  const lo = fy(ymin), hi = fy(ymax);
  const y = (v) => h - pad - ((fy(v) - lo) / (hi - lo || 1)) * (h - 2 * pad);
  ctx.strokeStyle = '#999';
  ctx.fillStyle = '#444';
  ctx.font = '11px sans-serif';
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2); ctx.lineTo(pad, h - pad); ctx.lineTo(w - pad / 2, h - pad);
  ctx.stroke();
  ctx.fillText(ymax.toPrecision(2), 2, y(ymax) + 4);
  ctx.fillText(ymin.toPrecision(2), 2, y(ymin));
  for (const s of series) {
    const n = s.values.length;
    if (n === 0) continue;
    const x = (i) => pad + (i / Math.max(n - 1, 1)) * (w - 1.5 * pad);
    ctx.strokeStyle = s.color;
    ctx.lineWidth = s.width ?? 1.5;
    ctx.setLineDash(s.dash ?? []);
    ctx.beginPath();
    s.values.forEach((v, i) => (i ? ctx.lineTo(x(i), y(v)) : ctx.moveTo(x(i), y(v))));
    ctx.stroke();
    ctx.setLineDash([]);
  }
  if (series.length) ctx.fillText(`${series[0].values.length} steps`, w - 80, h - 10);
}

function drawThresholds() {
  const c = num('th-c');
  let trace;
  try {
    trace = simulate_thresholds(c, num('th-beta'), num('th-steps'), num('th-batch'), num('th-seed'));
  } catch (e) {
    console.warn(e);
    return;
  }
  const steps = trace.steps();
  const ct = trace.class_thresholds();
  const series = [];
  for (let k = 0; k < c; k++) {
    const vals = new Array(steps);
    for (let s = 0; s < steps; s++) vals[s] = ct[s * c + k];
    series.push({ values: vals, color: '#7f8c8d', width: 0.8 });
  }
  series.push({ values: Array.from(trace.tau()), color: '#c0392b', width: 2.5 });
  series.push({ values: Array.from(trace.selection_rate()), color: '#2980b9', dash: [5, 4] });
  plot($('th-plot'), series);
  trace.free();
}

function putRgba(canvas, rgba, w, h) {
  canvas.width = w;
  canvas.height = h;
  canvas.style.width = `${w * SCALE}px`;
  canvas.style.height = `${h * SCALE}px`;
  canvas.getContext('2d').putImageData(new ImageData(new Uint8ClampedArray(rgba), w, h), 0, 0);
}

let explorer = null;
let rect = null;

function outline(canvas, r, color) {
  const ctx = canvas.getContext('2d');
  ctx.strokeStyle = color;
  ctx.lineWidth = 1;
  ctx.strokeRect(r[1] + 0.5, r[0] + 0.5, r[3] - r[1] - 1, r[2] - r[0] - 1);
}

function refreshMix() {
  if (!explorer) return;
  const w = explorer.width(), h = explorer.height();
  putRgba($('mix-a'), explorer.image_rgba(0), w, h);
  putRgba($('mix-b'), explorer.image_rgba(1), w, h);
  putRgba($('heat-a'), explorer.heatmap_rgba(0), w, h);
  putRgba($('heat-b'), explorer.heatmap_rgba(1), w, h);
  const r = rect ?? [0, 0, 0, 0];
  const out = explorer.mix(r[0], r[1], r[2], r[3]);
  putRgba($('mix-out'), out.rgba(), w, h);
  if (rect) {
    outline($('mix-b'), rect, '#fff');
    outline($('mix-out'), rect, '#fff');
  }
  const f = out.area();
  $('mix-stats').textContent =
    `area fraction f   ${f.toFixed(4)}\n` +
    `semantic   ρ_a    ${out.rho_a().toFixed(4)}   ρ_b ${out.rho_b().toFixed(4)}\n` +
    `by area    1 − f  ${(1 - f).toFixed(4)}   f   ${f.toFixed(4)}\n` +
    `|ρ_a − (1 − f)|   ${Math.abs(out.rho_a() - (1 - f)).toFixed(4)}`;
  out.free();
}

function rebuildExplorer() {
  try {
    const next = new MixExplorer(num('mx-seed'), num('mx-a'), num('mx-b'));
    explorer?.free();
    explorer = next;
    rect = null;
    refreshMix();
  } catch (e) {
    $('mix-stats').textContent = String(e);
  }
}

function pixelAt(canvas, ev) {
  const b = canvas.getBoundingClientRect();
  const x = Math.floor(((ev.clientX - b.left) / b.width) * canvas.width);
  const y = Math.floor(((ev.clientY - b.top) / b.height) * canvas.height);
  return [Math.max(0, Math.min(canvas.height, y)), Math.max(0, Math.min(canvas.width, x))];
}

function wireDrag() {
  const c = $('mix-b');
  let start = null;
  c.addEventListener('mousedown', (ev) => { start = pixelAt(c, ev); });
  window.addEventListener('mousemove', (ev) => {
    if (!start) return;
    const [y, x] = pixelAt(c, ev);
    rect = [Math.min(start[0], y), Math.min(start[1], x), Math.max(start[0], y) + 1, Math.max(start[1], x) + 1];
    refreshMix();
  });
  window.addEventListener('mouseup', () => { start = null; });
}

function drawLr() {
  const curve = lr_curve(num('lr-init'), num('lr-period'), num('lr-decay'), num('lr-tail'), num('lr-epochs'), num('lr-spe'));
  const values = Array.from(curve);
  const max = Math.max(...values, 1e-12);
  const log = $('lr-log').checked;
  plot($('lr-plot'), [{ values, color: '#27ae60', width: 2 }], { ymin: log ? max * 1e-5 : 0, ymax: max, log });
}

await init();
for (const id of ['th-c', 'th-beta', 'th-steps', 'th-batch', 'th-seed']) $(id).addEventListener('input', drawThresholds);
for (const id of ['mx-seed', 'mx-a', 'mx-b']) $(id).addEventListener('input', rebuildExplorer);
for (const id of ['lr-init', 'lr-period', 'lr-decay', 'lr-tail', 'lr-epochs', 'lr-spe', 'lr-log']) $(id).addEventListener('input', drawLr);
wireDrag();
drawThresholds();
rebuildExplorer();
drawLr();
