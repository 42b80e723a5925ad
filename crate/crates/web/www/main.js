import init, { pairWrench, carrierForce, simulate, presetNames } from "./pkg/emff_web.js";

const fmt = (v) => v.toExponential(4).padStart(12);
const val = (root, name) => Number(root.querySelector(`[name=${name}]`).value);

// Series of [xs, ys, colour, dashed]; each series is scaled to its own range when `own` is set.
function plot(canvas, series, own = false) {
  const g = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 24;
  g.clearRect(0, 0, w, h);
  const all = series.flatMap(([, ys]) => ys);
  const xs0 = series[0][0];
  const x0 = Math.min(...xs0), x1 = Math.max(...xs0);
  for (const [xs, ys, colour, dashed] of series) {
    const pool = own ? ys : all;
    let lo = Math.min(...pool), hi = Math.max(...pool);
    if (hi === lo) { hi += 1; lo -= 1; }
    g.strokeStyle = colour;
    g.setLineDash(dashed ? [6, 4] : []);
    g.beginPath();
    xs.forEach((x, i) => {
      const px = pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
      const py = h - pad - ((ys[i] - lo) / (hi - lo)) * (h - 2 * pad);
      i ? g.lineTo(px, py) : g.moveTo(px, py);
    });
    g.stroke();
  }
  g.setLineDash([]);
}

function guard(out, f) {
  try {
    out.classList.remove("err");
    f();
  } catch (e) {
    out.classList.add("err");
    out.textContent = e.message ?? String(e);
  }
}

function pair() {
  const root = document.getElementById("pair");
  const out = root.querySelector(".out");
  guard(out, () => {
    const w = pairWrench(val(root, "d"), val(root, "ma"), val(root, "ta"), val(root, "mb"), val(root, "tb"));
    out.textContent =
      `force,  N    ${fmt(w[0])} ${fmt(w[1])} ${fmt(w[2])}\n` +
      `torque, N m  ${fmt(w[3])} ${fmt(w[4])} ${fmt(w[5])}`;
  });
}

function carrier() {
  const root = document.getElementById("carrier");
  const out = root.querySelector(".out");
  const n = 128;
  guard(out, () => {
    const f = carrierForce(val(root, "d"), val(root, "aa"), val(root, "ab"), val(root, "ph"), n);
    const avg = f[n];
    const ts = Array.from({ length: n }, (_, k) => k / n);
    plot(root.querySelector("canvas"), [
      [ts, Array.from(f.slice(0, n)), "#1f77b4", false],
      [ts, ts.map(() => avg), "#d62728", true],
    ]);
    out.textContent = `phase ${val(root, "ph")} deg, average axial force ${fmt(avg)} N`;
  });
}

function sim() {
  const root = document.getElementById("sim");
  const out = root.querySelector(".out");
  out.textContent = "running...";
  setTimeout(() => guard(out, () => {
    const preset = root.querySelector("[name=preset]").value;
    const rows = simulate(preset, val(root, "dur"));
    const col = (k) => Array.from({ length: rows.length / 4 }, (_, i) => rows[4 * i + k]);
    const t = col(0);
    plot(root.querySelector("canvas"), [
      [t, col(1), "#1f77b4", false],
      [t, col(2), "#2ca02c", false],
      [t, col(3), "#ff7f0e", false],
    ], true);
    const last = rows.length - 4;
    out.textContent =
      `blue |dq| ${fmt(rows[last + 1])}   green |L| ${fmt(rows[last + 2])} N m s   ` +
      `orange spread ${fmt(rows[last + 3])} N m s   (t = ${rows[last]} s, each curve on its own scale)`;
  }), 0);
}

await init();
const select = document.querySelector("#sim [name=preset]");
for (const name of presetNames()) select.add(new Option(name, name));
document.querySelectorAll("#pair input").forEach((e) => e.addEventListener("input", pair));
document.querySelectorAll("#carrier input").forEach((e) => e.addEventListener("input", carrier));
document.querySelector("#sim button").addEventListener("click", sim);
pair();
carrier();
