import init, { kernel_profile, hitting_profile, ratio_map } from "./pkg/hk_wasm.js";

const num = (id) => Number(document.getElementById(id).value);

function rows(flat, width) {
  const out = [];
  for (let i = 0; i < flat.length; i += width) out.push(Array.from(flat.slice(i, i + width)));
  return out;
}

function extent(values) {
  const v = values.filter(Number.isFinite);
  let lo = Math.min(...v), hi = Math.max(...v);
  if (lo === hi) { lo -= 1; hi += 1; }
  return [lo, hi];
}

// series: [{ values, color, axis }]; axis "right" uses its own scale
function linePlot(canvas, xs, series, { logX = false } = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 48;
  ctx.clearRect(0, 0, W, H);
  const fx = logX ? Math.log10 : (v) => v;
  const [x0, x1] = extent(xs.map(fx));
  const left = series.filter((s) => s.axis !== "right").flatMap((s) => s.values);
  const right = series.filter((s) => s.axis === "right").flatMap((s) => s.values);
  const scales = { left: extent(left), right: right.length ? extent(right) : null };
  const px = (v) => pad + ((fx(v) - x0) / (x1 - x0)) * (W - 2 * pad);
  const py = (v, [lo, hi]) => H - pad - ((v - lo) / (hi - lo)) * (H - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, W - 2 * pad, H - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px system-ui";
  for (let k = 0; k <= 4; k++) {
    const xv = x0 + ((x1 - x0) * k) / 4;
    ctx.fillText((logX ? "1e" + xv.toFixed(1) : xv.toPrecision(3)), pad + ((W - 2 * pad) * k) / 4 - 12, H - pad + 16);
    const [lo, hi] = scales.left;
    ctx.fillText((lo + ((hi - lo) * k) / 4).toPrecision(3), 2, py(lo + ((hi - lo) * k) / 4, scales.left) + 4);
    if (scales.right) {
      const [rl, rh] = scales.right;
      ctx.fillText((rl + ((rh - rl) * k) / 4).toPrecision(3), W - pad + 4, py(rl + ((rh - rl) * k) / 4, scales.right) + 4);
    }
  }
  for (const s of series) {
    const sc = s.axis === "right" ? scales.right : scales.left;
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    let pen = false;
    s.values.forEach((v, i) => {
      if (!Number.isFinite(v)) { pen = false; return; }
      if (pen) ctx.lineTo(px(xs[i]), py(v, sc)); else ctx.moveTo(px(xs[i]), py(v, sc));
      pen = true;
    });
    ctx.stroke();
  }
}

function colour(v, lo, hi) {
  if (!Number.isFinite(v)) return "#ddd";
  const u = Math.max(0, Math.min(1, (v - lo) / (hi - lo)));
  const r = Math.round(40 + 200 * u), b = Math.round(220 - 180 * u);
  return `rgb(${r},90,${b})`;
}

function heatmap(canvas, values, n) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height;
  const [lo, hi] = extent(values);
  const cw = W / n, ch = H / n;
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      ctx.fillStyle = colour(values[i * n + j], lo, hi);
      // x grows upwards, t to the right
      ctx.fillRect(j * cw, H - (i + 1) * ch, Math.ceil(cw), Math.ceil(ch));
    }
  }
  return [lo, hi];
}

function guarded(statusId, f) {
  return () => {
    const status = document.getElementById(statusId);
    status.textContent = "";
    try {
      f();
    } catch (e) {
      status.textContent = String(e.message ?? e);
    }
  };
}

const plotKernel = guarded("k-status", () => {
  const r = rows(kernel_profile(num("k-t"), num("k-x"), num("k-ymax"), 200), 4);
  const ys = r.map((v) => v[0]);
  linePlot(document.getElementById("k-plot"), ys, [
    { values: r.map((v) => v[1]), color: "#888" },
    { values: r.map((v) => v[2]), color: "#c33" },
    { values: r.map((v) => v[3]), color: "#36c" },
  ]);
});

const plotHitting = guarded("h-status", () => {
  const r = rows(hitting_profile(num("h-x"), num("h-lo"), num("h-hi"), 120), 4);
  const ss = r.map((v) => v[0]);
  linePlot(document.getElementById("h-plot"), ss, [
    { values: r.map((v) => v[1]), color: "#c33" },
    { values: r.map((v) => v[2]), color: "#888" },
    { values: r.map((v) => v[3]), color: "#36c", axis: "right" },
  ], { logX: true });
});

const plotRatio = guarded("r-status", () => {
  const n = Math.max(2, Math.min(64, Math.round(num("r-n"))));
  const values = ratio_map(num("r-y"), 1e-3, 1e4, 1.001, 1e3, n);
  const [lo, hi] = heatmap(document.getElementById("r-plot"), Array.from(values), n);
  document.getElementById("r-range").textContent =
    `t from 1e-3 to 1e4 (left to right), x from 1.001 to 1e3 (bottom to top); log10 ratio in [${lo.toFixed(3)}, ${hi.toFixed(3)}]`;
});

await init();
document.getElementById("k-go").onclick = plotKernel;
document.getElementById("h-go").onclick = plotHitting;
document.getElementById("r-go").onclick = plotRatio;
plotKernel();
plotHitting();
