import init, { simulate_drop, max_min_curve, sinr_check } from "./pkg/mimo_assoc_web.js";

const BS_COLORS = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"];
const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function guarded(out, fn) {
  try {
    fn();
  } catch (e) {
    out.innerHTML = `<span class="err">${e.message ?? e}</span>`;
  }
}

function drawDrop(canvas, view, policy) {
  const ctx = canvas.getContext("2d");
  const pad = 20;
  const xs = view.bs.concat(view.users).map((p) => p.x);
  const ys = view.bs.concat(view.users).map((p) => p.y);
  const lo = Math.min(...xs, ...ys), hi = Math.max(...xs, ...ys);
  const scale = (canvas.width - 2 * pad) / (hi - lo || 1);
  const px = (p) => [pad + (p.x - lo) * scale, canvas.height - pad - (p.y - lo) * scale];

  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (policy.feasible) {
    policy.serving_sets.forEach((set, k) => {
      for (const i of set) {
        ctx.strokeStyle = BS_COLORS[i % BS_COLORS.length];
        ctx.lineWidth = set.length > 1 ? 2.5 : 1;
        ctx.beginPath();
        ctx.moveTo(...px(view.bs[i]));
        ctx.lineTo(...px(view.users[k]));
        ctx.stroke();
      }
    });
  }
  view.bs.forEach((b, i) => {
    const [x, y] = px(b);
    ctx.fillStyle = BS_COLORS[i % BS_COLORS.length];
    ctx.fillRect(x - 6, y - 6, 12, 12);
  });
  view.users.forEach((u, k) => {
    const [x, y] = px(u);
    ctx.fillStyle = policy.feasible && policy.serving_sets[k].length > 1 ? "#000" : "#888";
    ctx.beginPath();
    ctx.arc(x, y, 4, 0, 2 * Math.PI);
    ctx.fill();
  });
}

function describe(policy) {
  if (!policy.feasible) return "infeasible";
  const joint = policy.serving_sets.filter((s) => s.length > 1).length;
  const perBs = policy.bs_power_w.map((p) => p.toFixed(2)).join(" / ");
  return `total ${policy.total_power_w.toFixed(3)} W (per BS ${perBs}); ${joint} jointly served users`;
}

function runDrop() {
  guarded($("d-opt-txt"), () => {
    const view = JSON.parse(simulate_drop(num("d-seed"), num("d-m"), num("d-se")));
    drawDrop($("d-opt"), view, view.optimal);
    drawDrop($("d-snr"), view, view.max_snr);
    $("d-opt-txt").textContent = describe(view.optimal);
    $("d-snr-txt").textContent = describe(view.max_snr);
  });
}

function runCurve() {
  guarded($("c-txt"), () => {
    const ms = Uint32Array.from($("c-m").value.split(",").map((s) => Number(s.trim())));
    const pts = JSON.parse(max_min_curve(num("c-seed"), num("c-drops"), ms));
    const canvas = $("c-plot");
    const ctx = canvas.getContext("2d");
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const pad = 40;
    const mMax = Math.max(...pts.map((p) => p.antennas));
    const yMax = Math.max(...pts.map((p) => p.xi_optimal ?? 0)) * 1.1 || 1;
    const X = (m) => pad + (m / mMax) * (canvas.width - 2 * pad);
    const Y = (v) => canvas.height - pad - (v / yMax) * (canvas.height - 2 * pad);
    ctx.strokeStyle = "#999";
    ctx.strokeRect(pad, pad, canvas.width - 2 * pad, canvas.height - 2 * pad);
    ctx.fillStyle = "#333";
    ctx.fillText("M", canvas.width - pad + 6, canvas.height - pad);
    ctx.fillText(`${yMax.toFixed(2)} bit/symbol`, 4, pad - 6);
    for (const [key, color] of [["xi_optimal", "#d62728"], ["xi_max_snr", "#1f77b4"]]) {
      ctx.strokeStyle = color;
      ctx.beginPath();
      pts.forEach((p, j) => (j ? ctx.lineTo : ctx.moveTo).call(ctx, X(p.antennas), Y(p[key] ?? 0)));
      ctx.stroke();
    }
    $("c-txt").innerHTML =
      "<table><tr><th>M</th><th>optimal</th><th>max-SNR</th><th>single-BS users</th></tr>" +
      pts
        .map((p) => `<tr><td>${p.antennas}</td><td>${p.xi_optimal?.toFixed(3)}</td><td>${p.xi_max_snr?.toFixed(3)}</td><td>${p.single_bs_fraction?.toFixed(3)}</td></tr>`)
        .join("") +
      "</table><span style='color:#d62728'>optimal</span> / <span style='color:#1f77b4'>max-SNR</span>";
  });
}

function runSinr() {
  guarded($("s-txt"), () => {
    const rows = JSON.parse(sinr_check(num("s-seed"), num("s-m"), num("s-n")));
    const head = rows.length ? `${rows[0].num_bs} BSs, ${rows[0].num_users} users` : "";
    $("s-txt").innerHTML =
      `${head}<table><tr><th>user</th><th>closed form</th><th>Monte Carlo</th><th>std. error</th><th>rel. error</th></tr>` +
      rows
        .map((r) => `<tr><td>${r.user}</td><td>${r.closed_form.toFixed(4)}</td><td>${r.monte_carlo.toFixed(4)}</td><td>${r.std_error.toFixed(4)}</td><td>${(100 * r.rel_error).toFixed(2)}%</td></tr>`)
        .join("") +
      "</table>";
  });
}

await init();
$("d-run").onclick = runDrop;
$("c-run").onclick = runCurve;
$("s-run").onclick = runSinr;
runDrop();
