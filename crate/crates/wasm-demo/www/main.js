import init, { simulate_pme, simulate_mcf_curve, regularization_profile } from "../pkg/gradnoise_wasm.js";

const M = 128;
const FRAMES = 40;

const num = (id) => Number(document.getElementById(id).value);

function rows(flat, m) {
  const out = [];
  for (let i = 0; i < flat.length; i += m) out.push(flat.subarray(i, i + m));
  return out;
}

function drawLines(canvas, xs, series, colors) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  let lo = Infinity, hi = -Infinity;
  for (const s of series) for (const v of s) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  if (hi - lo < 1e-12) { hi += 0.5; lo -= 0.5; }
  const x0 = xs[0], x1 = xs[xs.length - 1];
  const px = (x) => 10 + (w - 20) * (x - x0) / (x1 - x0);
  const py = (y) => h - 10 - (h - 20) * (y - lo) / (hi - lo);
  series.forEach((s, k) => {
    ctx.strokeStyle = colors[k % colors.length];
    ctx.beginPath();
    s.forEach((v, i) => (i ? ctx.lineTo(px(xs[i]), py(v)) : ctx.moveTo(px(xs[i]), py(v))));
    ctx.stroke();
  });
}

function animate(canvas, xs, frames, color) {
  let k = 0;
  const tick = () => {
    drawLines(canvas, xs, [frames[0], frames[k]], ["#bbb", color]);
    k += 1;
    if (k < frames.length) requestAnimationFrame(tick);
  };
  tick();
}

function guarded(errId, f) {
  return () => {
    const err = document.getElementById(errId);
    err.textContent = "";
    try { f(); } catch (e) { err.textContent = String(e.message ?? e); }
  };
}

await init();

const cells = Float64Array.from({ length: M }, (_, i) => i / M);
const faces = Float64Array.from({ length: M }, (_, i) => (i + 0.5) / M);

document.getElementById("pme-run").onclick = guarded("pme-err", () => {
  const flat = simulate_pme(M, num("pme-exp"), num("pme-n"), num("pme-noise"), num("pme-t"), BigInt(num("pme-seed")), FRAMES);
  animate(document.getElementById("pme-canvas"), cells, rows(flat, M), "#1f5fa8");
});

document.getElementById("mcf-run").onclick = guarded("mcf-err", () => {
  const flat = simulate_mcf_curve(M, num("mcf-noise"), num("mcf-n"), num("mcf-t"), BigInt(num("mcf-seed")), FRAMES);
  animate(document.getElementById("mcf-canvas"), faces, rows(flat, M), "#a8321f");
});

document.getElementById("reg-run").onclick = guarded("reg-err", () => {
  const pts = 401;
  const flat = regularization_profile(num("reg-exp"), num("reg-n"), num("reg-range"), pts);
  const [r, a, an] = rows(flat, pts);
  drawLines(document.getElementById("reg-canvas"), r, [a, an], ["#999", "#1f8a3a"]);
});
