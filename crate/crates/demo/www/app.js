import init, { AfemDemo } from './pkg/afem_demo.js';

const $ = (id) => document.getElementById(id);
const meshCanvas = $('mesh');
const histCanvas = $('history');
let demo = null;
let view = null;

function bounds(v) {
  let [x0, y0, x1, y1] = [Infinity, Infinity, -Infinity, -Infinity];
  for (let i = 0; i < v.length; i += 2) {
    x0 = Math.min(x0, v[i]); x1 = Math.max(x1, v[i]);
    y0 = Math.min(y0, v[i + 1]); y1 = Math.max(y1, v[i + 1]);
  }
  const pad = 16;
  const s = Math.min((meshCanvas.width - 2 * pad) / (x1 - x0), (meshCanvas.height - 2 * pad) / (y1 - y0));
  return {
    toScreen: (x, y) => [pad + (x - x0) * s, meshCanvas.height - pad - (y - y0) * s],
    toWorld: (px, py) => [x0 + (px - pad) / s, y0 + (meshCanvas.height - pad - py) / s],
  };
}

// Blue to red through white.
function colour(t) {
  t = Math.min(1, Math.max(0, t));
  const r = t < 0.5 ? 2 * t : 1;
  const b = t < 0.5 ? 1 : 2 * (1 - t);
  const g = 1 - Math.abs(2 * t - 1);
  return `rgb(${Math.round(255 * r)},${Math.round(255 * (0.3 + 0.7 * g))},${Math.round(255 * b)})`;
}

function range(values) {
  let lo = Infinity, hi = -Infinity;
  for (const v of values) { if (Number.isFinite(v)) { lo = Math.min(lo, v); hi = Math.max(hi, v); } }
  return hi > lo ? [lo, hi] : [lo, lo + 1];
}

function drawMesh() {
  const ctx = meshCanvas.getContext('2d');
  const v = demo.vertices();
  const t = demo.triangles();
  view = bounds(v);
  const shade = document.querySelector('input[name=shade]:checked').value;
  let values;
  if (shade === 'indicator') {
    values = Array.from(demo.indicators(), (x) => Math.log10(Math.max(x, 1e-300)));
  } else {
    const u = demo.solution();
    values = [];
    for (let k = 0; k < t.length; k += 3) values.push((u[t[k]] + u[t[k + 1]] + u[t[k + 2]]) / 3);
  }
  const [lo, hi] = range(values);
  ctx.clearRect(0, 0, meshCanvas.width, meshCanvas.height);
  ctx.lineWidth = 0.5;
  ctx.strokeStyle = '#333';
  for (let k = 0; k < t.length; k += 3) {
    ctx.beginPath();
    for (let j = 0; j < 3; j++) {
      const [px, py] = view.toScreen(v[2 * t[k + j]], v[2 * t[k + j] + 1]);
      if (j === 0) ctx.moveTo(px, py); else ctx.lineTo(px, py);
    }
    ctx.closePath();
    ctx.fillStyle = colour((values[k / 3] - lo) / (hi - lo));
    ctx.fill();
    if (t.length < 3 * 20000) ctx.stroke();
  }
  if ($('show-marked').checked) {
    const m = demo.last_marked();
    ctx.strokeStyle = '#000';
    ctx.lineWidth = 1.5;
    for (let k = 0; k < m.length; k += 6) {
      ctx.beginPath();
      for (let j = 0; j < 3; j++) {
        const [px, py] = view.toScreen(m[k + 2 * j], m[k + 2 * j + 1]);
        if (j === 0) ctx.moveTo(px, py); else ctx.lineTo(px, py);
      }
      ctx.closePath();
      ctx.stroke();
    }
  }
}

function drawHistory() {
  const ctx = histCanvas.getContext('2d');
  const h = JSON.parse(demo.history());
  const W = histCanvas.width, H = histCanvas.height, pad = 30;
  ctx.clearRect(0, 0, W, H);
  if (h.length < 1) return;
  const xs = h.map((s) => Math.log10(s.elements));
  const ys = h.flatMap((s) => [s.eta, s.error].filter((y) => y > 0).map(Math.log10));
  const [x0, x1] = range(xs);
  const [y0, y1] = range(ys);
  const px = (x) => pad + (x - x0) / (x1 - x0) * (W - 2 * pad);
  const py = (y) => H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad);
  ctx.strokeStyle = '#999';
  ctx.strokeRect(pad, pad, W - 2 * pad, H - 2 * pad);
  ctx.fillStyle = '#333';
  ctx.fillText('log10 elements', W / 2 - 30, H - 8);
  ctx.fillText('η', 6, pad + 10);
  const series = (key, style) => {
    ctx.strokeStyle = style;
    ctx.fillStyle = style;
    ctx.beginPath();
    let started = false;
    h.forEach((s, i) => {
      if (!(s[key] > 0)) return;
      const X = px(xs[i]), Y = py(Math.log10(s[key]));
      if (started) ctx.lineTo(X, Y); else { ctx.moveTo(X, Y); started = true; }
      ctx.fillRect(X - 2, Y - 2, 4, 4);
    });
    ctx.stroke();
  };
  series('eta', '#c33');
  series('error', '#36c');
  // Reference slope N^{-1/2}.
  ctx.strokeStyle = '#aaa';
  ctx.setLineDash([4, 4]);
  ctx.beginPath();
  ctx.moveTo(px(x0), py(y1));
  ctx.lineTo(px(x1), py(y1 - 0.5 * (x1 - x0)));
  ctx.stroke();
  ctx.setLineDash([]);
}

function refresh() {
  const h = JSON.parse(demo.history());
  const last = h[h.length - 1];
  $('status').textContent =
    `elements  ${demo.elements()}\n` +
    `η         ${demo.eta().toExponential(4)}\n` +
    (last && last.error != null ? `error     ${last.error.toExponential(4)}\n` : '') +
    `steps     ${h.length - 1}`;
  drawMesh();
  drawHistory();
}

function guarded(f) {
  return (...args) => {
    $('error').textContent = '';
    try { f(...args); } catch (e) { $('error').textContent = String(e.message ?? e); }
    refresh();
  };
}

function reset() {
  demo?.free();
  demo = new AfemDemo($('problem').value, $('estimator').value);
  demo.set_binning($('binning').checked);
}

async function main() {
  await init();
  for (const p of AfemDemo.problems()) $('problem').add(new Option(p, p));
  reset();

  $('theta').addEventListener('input', () => { $('theta-value').textContent = $('theta').value; });
  $('step').addEventListener('click', guarded(() => demo.adaptive_step(Number($('theta').value))));
  $('run10').addEventListener('click', guarded(() => {
    for (let i = 0; i < 10 && demo.elements() < 50000; i++) demo.adaptive_step(Number($('theta').value));
  }));
  $('uniform').addEventListener('click', guarded(() => demo.uniform_step()));
  $('reset').addEventListener('click', guarded(reset));
  $('problem').addEventListener('change', guarded(reset));
  $('estimator').addEventListener('change', guarded(() => demo.set_estimator($('estimator').value)));
  $('binning').addEventListener('change', guarded(() => demo.set_binning($('binning').checked)));
  for (const el of document.querySelectorAll('input[name=shade], #show-marked')) el.addEventListener('change', refresh);
  meshCanvas.addEventListener('click', guarded((ev) => {
    const r = meshCanvas.getBoundingClientRect();
    const [x, y] = view.toWorld(ev.clientX - r.left, ev.clientY - r.top);
    demo.click_refine(x, y);
  }));
  refresh();
}

main().catch((e) => { $('error').textContent = String(e); });
