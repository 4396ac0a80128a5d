import init, { coneArcs, abpImage, fixtureQuotient, twoPointConfiguration } from "./pkg/abp_web.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"];
const STATUS = [
  ["interior contact", "#2ca02c"],
  ["free-boundary contact", "#1f77b4"],
  ["minimizer on Σ", "#d62728"],
  ["gradient mismatch", "#bbb"],
];

function fmt(x) {
  return typeof x === "number" && !Number.isInteger(x) ? x.toPrecision(6) : String(x);
}

function show(el, obj) {
  el.classList.remove("err");
  el.textContent = Object.entries(obj).map(([k, v]) => `${k}: ${fmt(v)}`).join("\n");
}

function fail(el, e) {
  el.classList.add("err");
  el.textContent = String(e.message ?? e);
}

// world box [x0, x1] × [y0, y1] onto a canvas with equal aspect
function view(canvas, x0, x1, y0, y1) {
  const s = Math.min(canvas.width / (x1 - x0), canvas.height / (y1 - y0));
  const ox = (canvas.width - s * (x1 - x0)) / 2;
  const oy = (canvas.height - s * (y1 - y0)) / 2;
  return { s, px: (x) => ox + (x - x0) * s, py: (y) => canvas.height - oy - (y - y0) * s };
}

function drawCones() {
  const out = $("cone-out");
  const rho = Number($("cone-rho").value);
  $("cone-rho-v").textContent = rho.toFixed(2);
  const c = $("cone-canvas");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  let r;
  try {
    r = JSON.parse(coneArcs($("cone-text").value, rho));
  } catch (e) {
    return fail(out, e);
  }
  const v = view(c, -1.15, 1.15, -1.15, 1.15);
  g.strokeStyle = "#ccc";
  g.beginPath();
  g.arc(v.px(0), v.py(0), v.s, 0, 2 * Math.PI);
  g.stroke();
  r.points.forEach((p, i) => {
    g.strokeStyle = COLORS[i % COLORS.length];
    for (const [a, b] of p.arcs) {
      const rr = v.s * (1 - 0.04 * i);
      g.lineWidth = 6;
      g.beginPath();
      g.arc(v.px(0), v.py(0), rr, -b, -a);
      g.stroke();
    }
  });
  g.lineWidth = 1;
  show(out, {
    "|N^u X/σ| on ρ-circle": r.union,
    "half circle πρ": r.half_circle,
    ratio: r.ratio,
    ...Object.fromEntries(r.points.map((p, i) => [`point ${i} arc length`, p.measure])),
  });
}

function drawAbp() {
  const out = $("abp-out");
  $("abp-amp-v").textContent = Number($("abp-amp").value).toFixed(2);
  let r;
  try {
    r = JSON.parse(abpImage(Number($("abp-amp").value), Number($("abp-h").value), Number($("abp-n").value), Number($("abp-seed").value)));
  } catch (e) {
    return fail(out, e);
  }
  const d = $("abp-domain");
  const gd = d.getContext("2d");
  gd.clearRect(0, 0, d.width, d.height);
  const xs = r.outline.flatMap((f) => [f.a[0], f.b[0]]);
  const ys = r.outline.flatMap((f) => [f.a[1], f.b[1]]);
  const m = 0.05;
  const vd = view(d, Math.min(...xs) - m, Math.max(...xs) + m, Math.min(...ys) - m, Math.max(...ys) + m);
  gd.lineWidth = 2;
  for (const f of r.outline) {
    gd.strokeStyle = f.sigma ? "#d62728" : "#1f77b4";
    gd.beginPath();
    gd.moveTo(vd.px(f.a[0]), vd.py(f.a[1]));
    gd.lineTo(vd.px(f.b[0]), vd.py(f.b[1]));
    gd.stroke();
  }
  const c = $("abp-canvas");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const v = view(c, -1.05, 1.05, -1.05, 1.05);
  g.strokeStyle = "#999";
  g.beginPath();
  g.arc(v.px(0), v.py(0), v.s, 0, 2 * Math.PI);
  g.stroke();
  for (const [x, y, s] of r.samples) {
    g.fillStyle = STATUS[s][1];
    g.fillRect(v.px(x) - 1, v.py(y) - 1, 2, 2);
  }
  show(out, {
    "|∇u(Γ₊)| estimate": r.estimate,
    "standard error": r.standard_error,
    "|B|/2": r.half_ball,
    "quotient": r.quotient,
    "normalization scale": r.scale,
    ...Object.fromEntries(STATUS.map(([name], i) => [name, r.counts[i]])),
  });
}

function drawQuotient() {
  const out = $("q-out");
  let r;
  try {
    r = JSON.parse(fixtureQuotient($("q-spec").value, Number($("q-h").value)));
  } catch (e) {
    return fail(out, e);
  }
  const c = $("q-canvas");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  if (r.triangles.length) {
    const pts = r.triangles.flat();
    const xs = pts.map((p) => p[0]);
    const ys = pts.map((p) => p[1]);
    const v = view(c, Math.min(...xs), Math.max(...xs), Math.min(...ys), Math.max(...ys));
    g.strokeStyle = "#1f77b4";
    g.lineWidth = 0.5;
    for (const t of r.triangles) {
      g.beginPath();
      g.moveTo(v.px(t[0][0]), v.py(t[0][1]));
      for (const p of t.slice(1)) g.lineTo(v.px(p[0]), v.py(p[1]));
      g.closePath();
      g.stroke();
    }
  }
  show(out, {
    fixture: r.fixture,
    "dimension (intrinsic / ambient)": `${r.intrinsic_dim} / ${r.ambient_dim}`,
    "vertices / cells": `${r.vertices} / ${r.cells}`,
    "|M|": r.volume,
    "|Σ|": r.sigma,
    "|Γ|": r.gamma,
    "∫|H|": r.quotient.mean_curvature_integral,
    "quotient": r.quotient.ratio,
  });
}

await init();
$("cone-text").value = twoPointConfiguration();
$("cone-text").addEventListener("input", drawCones);
$("cone-rho").addEventListener("input", drawCones);
$("abp-run").addEventListener("click", drawAbp);
$("abp-amp").addEventListener("change", drawAbp);
$("abp-amp").addEventListener("input", () => ($("abp-amp-v").textContent = Number($("abp-amp").value).toFixed(2)));
$("q-run").addEventListener("click", drawQuotient);
drawCones();
drawAbp();
drawQuotient();
