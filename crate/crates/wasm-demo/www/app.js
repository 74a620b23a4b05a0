// Vanilla-JS front end for the wasm demo. Build the module first:
//   wasm-pack build crates/wasm-demo --target web --out-dir www/pkg
// then serve crates/wasm-demo/www and open index.html.

import init, {
  default_config,
  simulate_schedule,
  optimize_schedule,
  density_field,
} from "./pkg/tumorctl_wasm.js";

const $ = (id) => document.getElementById(id);
const status = (msg, err = false) => {
  const el = $("status");
  el.textContent = msg;
  el.className = err ? "err" : "";
};

// Sliders with live value readouts.
const sliders = ["m0", "lambda", "eps", "rho", "rate", "window", "period", "delta", "iters"];
function syncOutputs() {
  for (const id of sliders) $(`o-${id}`).value = $(id).value;
}

function configFragment() {
  return JSON.stringify({
    model: {
      m0: Number($("m0").value),
      lambda: Number($("lambda").value),
      eps: Number($("eps").value),
    },
    growth: { rho: Number($("rho").value) },
    dosing: {
      rate_per_day: Number($("rate").value),
      window_hours: Number($("window").value),
      period_days: Number($("period").value),
    },
    optimizer: {
      delta: Number($("delta").value),
      max_iters: Number($("iters").value),
    },
  });
}

// ---------------------------------------------------------------- plotting

function frame(canvas) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  return { ctx, left: 44, right: canvas.width - 10, top: 10, bottom: canvas.height - 26 };
}

function scale(domain, range) {
  const [d0, d1] = domain, [r0, r1] = range;
  const k = (r1 - r0) / (d1 - d0 || 1);
  return (v) => r0 + (v - d0) * k;
}

function axes(f, xdom, ydom, xlabel) {
  const { ctx } = f;
  ctx.strokeStyle = "#d8dce8";
  ctx.fillStyle = "#68718a";
  ctx.font = "10px system-ui";
  ctx.lineWidth = 1;
  const sx = scale(xdom, [f.left, f.right]);
  const sy = scale(ydom, [f.bottom, f.top]);
  ctx.strokeRect(f.left, f.top, f.right - f.left, f.bottom - f.top);
  const xticks = 6, yticks = 4;
  for (let i = 0; i <= xticks; i++) {
    const v = xdom[0] + ((xdom[1] - xdom[0]) * i) / xticks;
    ctx.fillText(v.toFixed(Math.abs(xdom[1]) > 10 ? 0 : 1), sx(v) - 6, f.bottom + 12);
  }
  for (let i = 0; i <= yticks; i++) {
    const v = ydom[0] + ((ydom[1] - ydom[0]) * i) / yticks;
    ctx.fillText(v.toPrecision(3), 2, sy(v) + 3);
  }
  if (xlabel) ctx.fillText(xlabel, (f.left + f.right) / 2 - 10, f.bottom + 24);
  return { sx, sy };
}

function polyline(ctx, sx, sy, xs, ys, color, width = 1.6, dash = []) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.setLineDash(dash);
  ctx.beginPath();
  for (let i = 0; i < xs.length; i++) {
    const [px, py] = [sx(xs[i]), sy(ys[i])];
    i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
  }
  ctx.stroke();
  ctx.setLineDash([]);
}

function drawConcentration(trace) {
  const f = frame($("plot-s"));
  const ymax = Math.max(1.0, ...trace.s) * 1.08;
  const { sx, sy } = axes(f, [0, trace.t[trace.t.length - 1]], [0, ymax], "day");
  const T = trace.t[trace.t.length - 1];
  polyline(f.ctx, sx, sy, [0, T], [trace.s_plus, trace.s_plus], "#dc2626", 1.2, [6, 4]);
  polyline(f.ctx, sx, sy, [7, T], [trace.s_minus, trace.s_minus], "#dc2626", 1.2, [6, 4]);
  polyline(f.ctx, sx, sy, [0, T], [trace.s_c, trace.s_c], "#9333ea", 1.2, [2, 4]);
  polyline(f.ctx, sx, sy, trace.t, trace.s, "#2563eb", 1.8);
  f.ctx.fillStyle = "#1c2330";
  f.ctx.fillText(
    `violations: upper ${trace.violation_upper.toFixed(4)}, lower ${trace.violation_lower.toFixed(4)}`,
    f.left + 8, f.top + 14,
  );
}

function drawControl(trace) {
  const f = frame($("plot-u"));
  const umax = Math.max(1e-9, ...trace.u) * 1.1;
  const { sx, sy } = axes(f, [0, trace.t[trace.t.length - 1]], [0, umax], "day");
  // Piecewise-constant steps.
  const xs = [], ys = [];
  for (let i = 0; i < trace.u.length; i++) {
    const t0 = trace.u_t[i];
    const t1 = i + 1 < trace.u_t.length ? trace.u_t[i + 1] : trace.t[trace.t.length - 1];
    xs.push(t0, t1);
    ys.push(trace.u[i], trace.u[i]);
  }
  polyline(f.ctx, sx, sy, xs, ys, "#0d9488", 1.4);
}

function drawObjective(iterates) {
  const f = frame($("plot-j"));
  if (!iterates || iterates.length === 0) {
    f.ctx.fillStyle = "#68718a";
    f.ctx.fillText("run the optimizer to populate", f.left + 10, (f.top + f.bottom) / 2);
    return;
  }
  const js = iterates.map((r) => r.j_eps);
  const { sx, sy } = axes(f, [0, js.length - 1], [0, Math.max(...js) * 1.05], "iteration");
  polyline(f.ctx, sx, sy, js.map((_, k) => k), js, "#2563eb", 1.8);
  f.ctx.fillStyle = "#2563eb";
  js.forEach((j, k) => {
    f.ctx.beginPath();
    f.ctx.arc(sx(k), sy(j), 2.6, 0, 2 * Math.PI);
    f.ctx.fill();
  });
}

const weekColors = ["#2563eb", "#dc2626", "#1c2330", "#16a34a", "#ca8a04"];

function drawProfiles(trace) {
  const f = frame($("plot-profiles"));
  const ymax = Math.max(1e-6, ...trace.profiles.flatMap((p) => p.y)) * 1.1;
  const { sx, sy } = axes(f, [0, trace.x[trace.x.length - 1] + trace.x[0]], [0, ymax], "x (cm)");
  trace.profiles.forEach((p, i) => {
    polyline(f.ctx, sx, sy, trace.x, p.y, weekColors[i % weekColors.length], 1.6);
    f.ctx.fillStyle = weekColors[i % weekColors.length];
    f.ctx.fillText(`d${p.day.toFixed(0)}`, f.right - 30, f.top + 12 + 11 * i);
  });
}

function heat(v) {
  // Dark blue -> yellow-white ramp.
  const t = Math.max(0, Math.min(1, v));
  const r = Math.round(255 * Math.min(1, 1.6 * t));
  const g = Math.round(255 * Math.pow(t, 1.35));
  const b = Math.round(255 * (0.25 + 0.6 * (1 - t) * (1 - t)));
  return [r, g, b];
}

function drawField(field) {
  const canvas = $("plot-field");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const size = Math.min(canvas.width, canvas.height) - 20;
  const cell = size / field.nx;
  const ox = (canvas.width - size) / 2, oy = 10;
  const vmax = field.max > 0 ? field.max : 1;
  for (let j = 0; j < field.ny; j++) {
    for (let i = 0; i < field.nx; i++) {
      const v = field.values[j * field.nx + i] / vmax;
      const [r, g, b] = heat(v);
      ctx.fillStyle = `rgb(${r},${g},${b})`;
      // Row 0 is the bottom of the domain.
      ctx.fillRect(ox + i * cell, oy + (field.ny - 1 - j) * cell, cell + 0.5, cell + 0.5);
    }
  }
  ctx.fillStyle = "#1c2330";
  ctx.font = "10px system-ui";
  ctx.fillText(`day ${field.day.toFixed(1)}, max density ${field.max.toExponential(2)}`, ox, oy + size + 12);
}

// ---------------------------------------------------------------- actions

let lastControl = null; // optimized schedule, for the field view

async function withButtons(fn) {
  const buttons = ["btn-simulate", "btn-optimize", "btn-field"].map($);
  buttons.forEach((b) => (b.disabled = true));
  try {
    // Let the disabled state paint before the solver blocks the thread.
    await new Promise((r) => setTimeout(r, 15));
    fn();
  } catch (e) {
    status(String(e), true);
  } finally {
    buttons.forEach((b) => (b.disabled = false));
  }
}

function doSimulate() {
  const t0 = performance.now();
  const out = JSON.parse(simulate_schedule(configFragment(), $("seed").value));
  lastControl = out.trace.u;
  drawConcentration(out.trace);
  drawControl(out.trace);
  drawProfiles(out.trace);
  drawObjective(null);
  renderField();
  status(
    `simulated in ${(performance.now() - t0).toFixed(0)} ms — feasibility: ` +
    `${out.feasibility_lhs.toFixed(4)} <= ${out.feasibility_rhs.toFixed(4)} ` +
    `(${out.feasible ? "feasible" : "infeasible"})`,
  );
}

function doOptimize() {
  const t0 = performance.now();
  const out = JSON.parse(optimize_schedule(configFragment(), $("seed").value));
  lastControl = out.trace.u;
  drawConcentration(out.trace);
  drawControl(out.trace);
  drawProfiles(out.trace);
  drawObjective(out.iterates);
  renderField();
  const last = out.iterates[out.iterates.length - 1];
  status(
    `optimized in ${(performance.now() - t0).toFixed(0)} ms — ${out.iterates.length - 1} iterations ` +
    `(${out.stopped}), J_eps ${out.iterates[0].j_eps.toFixed(3)} -> ${last.j_eps.toFixed(3)}, ` +
    `violations (${last.max_violation_upper.toFixed(3)}, ${last.max_violation_lower.toFixed(3)})`,
  );
}

function renderField() {
  const day = Number($("field-day").value);
  const control = lastControl ? JSON.stringify({ values: lastControl }) : "";
  const out = JSON.parse(density_field(configFragment(), control, day));
  drawField(out);
}

async function main() {
  await init();
  JSON.parse(default_config()); // sanity: module is alive
  syncOutputs();
  sliders.forEach((id) => $(id).addEventListener("input", syncOutputs));
  $("field-day").addEventListener("input", () => {
    $("o-field-day").textContent = `day ${$("field-day").value}`;
  });
  $("btn-simulate").addEventListener("click", () => withButtons(doSimulate));
  $("btn-optimize").addEventListener("click", () => withButtons(doOptimize));
  $("btn-field").addEventListener("click", () => withButtons(renderField));
  status("module loaded — simulate or optimize a schedule");
  withButtons(doSimulate);
}

main().catch((e) => status(`failed to load wasm module: ${e}`, true));
