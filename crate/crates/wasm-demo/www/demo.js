import init, { poissonProfile, laxGaps, stabilityCertificate, Simulation } from "./pkg/bo_lab_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);
const POINTS = 512;

let sim = null;
let frame = 0;

function datum() {
  const radii = [num("r1"), num("r2")];
  const alphas = [num("a1"), num("a2")];
  // a zero radius drops the kernel
  const keep = radii.map((r, i) => r > 0 ? i : -1).filter((i) => i >= 0);
  return {
    radii: new Float64Array(keep.map((i) => radii[i])),
    alphas: new Float64Array(keep.map((i) => alphas[i])),
    modes: parseInt($("modes").value, 10),
  };
}

function report(e) {
  $("error").textContent = e ? String(e.message ?? e) : "";
}

function draw(values, initial) {
  const c = $("plot");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const all = initial ? [...values, ...initial] : [...values];
  const lo = Math.min(...all), hi = Math.max(...all);
  const y = (v) => c.height - 10 - (v - lo) / (hi - lo || 1) * (c.height - 20);
  const line = (vs, color) => {
    g.strokeStyle = color;
    g.beginPath();
    vs.forEach((v, i) => {
      const x = i / (vs.length - 1) * c.width;
      i ? g.lineTo(x, y(v)) : g.moveTo(x, y(v));
    });
    g.stroke();
  };
  if (initial) line(initial, "#bbb");
  line(values, "#1f5fa8");
}

const fmt = (xs) => Array.from(xs, (v) => v.toExponential(4)).join(", ");

function show() {
  try {
    const d = datum();
    draw(poissonProfile(d.radii, d.alphas, d.modes, POINTS));
    $("gaps").textContent = fmt(laxGaps(d.radii, d.alphas, d.modes, 4));
    report();
  } catch (e) {
    report(e);
  }
}

function stop() {
  cancelAnimationFrame(frame);
  if (sim) {
    sim.free();
    sim = null;
  }
}

function run() {
  stop();
  try {
    const d = datum();
    const initial = poissonProfile(d.radii, d.alphas, d.modes, POINTS);
    sim = new Simulation(d.radii, d.alphas, d.modes, num("dt"), num("eps"));
    let tick = 0;
    const loop = () => {
      try {
        sim.step(25);
      } catch (e) {
        report(e);
        stop();
        return;
      }
      draw(sim.profile(POINTS), initial);
      $("time").textContent = sim.time().toFixed(2);
      $("drift").textContent = sim.energyDrift().toExponential(2);
      // the Lax eigenproblem is the expensive part; refresh it less often
      if (tick++ % 20 === 0) $("livegaps").textContent = fmt(sim.gaps(3));
      frame = requestAnimationFrame(loop);
    };
    report();
    loop();
  } catch (e) {
    report(e);
  }
}

function certify() {
  try {
    const gaps = new Float64Array($("cgaps").value.split(/[ ,]+/).filter(Boolean).map(Number));
    const c = JSON.parse(stabilityCertificate(gaps, num("ceps"), num("cem"), num("ceM")));
    const rows = c.hypothesis_flags.map((f) =>
      `${f.pass ? "pass" : "FAIL"}  ${f.name.padEnd(28)} ${String(f.lhs).padStart(24)} ${f.relation.padEnd(2)} ${f.rhs}`);
    $("certout").textContent =
      `Q = ${c.Q}, q = ${c.q}, k = [${c.k}], gamma* = [${c.gammaStar}], R^2 = ${c.Rsq}\n\n` + rows.join("\n");
    report();
  } catch (e) {
    report(e);
  }
}

await init();
$("show").onclick = show;
$("run").onclick = run;
$("stop").onclick = stop;
$("cert").onclick = certify;
show();
