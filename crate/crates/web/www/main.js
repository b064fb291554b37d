import init, { fixtures, trajectory, omega_limit, limit_profile } from "./pkg/ndslab_web.js";

const $ = (id) => document.getElementById(id);
const canvas = $("plot");
const ctx = canvas.getContext("2d");
const PAD = 40;

function status(text, isError = false) {
  $("status").textContent = text;
  $("status").className = isError ? "error" : "";
}

function bounds(space) {
  if (space.kind === "circle") return [0, space.circumference ?? 1];
  if (space.kind === "interval") return [space.lo, space.hi];
  return null;
}

function currentSystem() {
  const text = $("system").value;
  return { text, spec: JSON.parse(text) };
}

function frame(xr, yr, xlabel, ylabel) {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(PAD, PAD / 2, canvas.width - 1.5 * PAD, canvas.height - 1.5 * PAD);
  ctx.fillStyle = "#333";
  ctx.font = "12px system-ui";
  ctx.fillText(xlabel, canvas.width / 2, canvas.height - 8);
  ctx.save();
  ctx.translate(12, canvas.height / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(ylabel, 0, 0);
  ctx.restore();
  ctx.fillText(String(yr[1]), 4, PAD / 2 + 4);
  ctx.fillText(String(yr[0]), 4, canvas.height - PAD);
  ctx.fillText(String(xr[0]), PAD, canvas.height - PAD / 2 - 4);
  ctx.fillText(String(xr[1]), canvas.width - PAD, canvas.height - PAD / 2 - 4);
  const w = canvas.width - 1.5 * PAD;
  const h = canvas.height - 1.5 * PAD;
  return (x, y) => [PAD + ((x - xr[0]) / (xr[1] - xr[0])) * w, PAD / 2 + h - ((y - yr[0]) / (yr[1] - yr[0])) * h];
}

function dot(p, r = 2.5, color = "#1f5fa8") {
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(p[0], p[1], r, 0, 2 * Math.PI);
  ctx.fill();
}

function plotTrajectory() {
  const { text, spec } = currentSystem();
  const x0 = Number($("tx").value);
  const n = Number($("tn").value);
  const out = JSON.parse(trajectory(text, [x0], n));
  const yr = bounds(spec.space) ?? [0, 1];
  const to = frame([0, n], yr, "n", "x_n");
  ctx.strokeStyle = "#1f5fa8";
  ctx.beginPath();
  out.points.forEach((p, i) => {
    const [u, v] = to(i, p[0]);
    if (i === 0) ctx.moveTo(u, v);
    else ctx.lineTo(u, v);
  });
  ctx.stroke();
  out.points.forEach((p, i) => dot(to(i, p[0]), 2));
  const last = out.points[out.points.length - 1][0];
  status(`orbit of ${x0}: ${out.points.length} points, x_${n} = ${last}`);
}

function plotOmega() {
  const { text, spec } = currentSystem();
  const x0 = Number($("ox").value);
  const out = JSON.parse(
    omega_limit(text, [x0], Number($("ob").value), Number($("ok").value), Number($("oe").value)),
  );
  const r = bounds(spec.space) ?? [0, 1];
  const to = frame(r, [0, 1], "omega-limit centers", "");
  out.centers.forEach((c) => dot(to(c[0], 0.5), 3));
  const shown = out.centers.slice(0, 8).map((c) => c[0].toPrecision(8)).join(", ");
  status(`${out.count} cluster centers${out.count ? ": " + shown + (out.count > 8 ? ", …" : "") : ""}`);
}

function plotProfile() {
  const { text, spec } = currentSystem();
  const out = JSON.parse(
    limit_profile(text, Number($("pn").value), Number($("pw").value), Number($("pr").value)),
  );
  const r = bounds(spec.space) ?? [0, 1];
  const to = frame(r, r, "x", "tail values of f_1^n(x)");
  out.x.forEach((x, i) => out.values[i].forEach((v) => dot(to(x, v), 2)));
  status(`pointwise tail values on ${out.x.length} grid points, largest jump between neighbours ${out.max_jump}`);
}

function guarded(fn) {
  return () => {
    try {
      fn();
    } catch (e) {
      status(String(e), true);
    }
  };
}

async function main() {
  await init();
  const list = JSON.parse(fixtures());
  for (const f of list) {
    const opt = document.createElement("option");
    opt.value = f.name;
    opt.textContent = f.name;
    $("fixture").appendChild(opt);
  }
  const pick = () => {
    const f = list.find((g) => g.name === $("fixture").value);
    $("description").textContent = f.description;
    $("system").value = JSON.stringify(f.system, null, 2);
  };
  $("fixture").addEventListener("change", pick);
  $("fixture").value = "power_family";
  pick();
  $("run-trajectory").addEventListener("click", guarded(plotTrajectory));
  $("run-omega").addEventListener("click", guarded(plotOmega));
  $("run-profile").addEventListener("click", guarded(plotProfile));
  guarded(plotProfile)();
}

main().catch((e) => status(String(e), true));
