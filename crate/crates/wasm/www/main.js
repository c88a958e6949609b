import init, { penc, allocate_cores, simulate } from "./pkg/pulse_wasm.js";

const $ = (id) => document.getElementById(id);
const numbers = (text) => text.split(",").map((s) => s.trim()).filter((s) => s !== "").map(Number);

function fail(target, e) {
  target.innerHTML = "";
  const p = document.createElement("p");
  p.className = "err";
  p.textContent = String(e);
  target.appendChild(p);
}

function table(headers, rows) {
  const t = document.createElement("table");
  const head = t.insertRow();
  for (const h of headers) {
    const th = document.createElement("th");
    th.textContent = h;
    head.appendChild(th);
  }
  for (const row of rows) {
    const tr = t.insertRow();
    for (const cell of row) {
      const td = tr.insertCell();
      if (cell instanceof Node) td.appendChild(cell);
      else td.textContent = cell;
    }
  }
  return t;
}

function bar(value, max) {
  const span = document.createElement("span");
  span.className = "bar";
  span.style.width = `${max > 0 ? (12 * value) / max : 0}rem`;
  return span;
}

function runPenc() {
  const out = $("penc-out");
  try {
    const r = JSON.parse(penc($("penc-bits").value, Number($("penc-width").value)));
    const lines = [`events     [${r.events.join(", ")}]`, `popcount   ${r.popcount}`, `scan       ${r.scan_cycles} cycles`, ""];
    lines.push(`start      ${$("penc-bits").value.replace(/\s/g, "")}`);
    for (const s of r.steps) lines.push(`emit ${String(s.event).padStart(4)}  ${s.remaining}`);
    out.textContent = lines.join("\n");
  } catch (e) {
    out.textContent = "";
    fail(out, e);
  }
}

function runAllocate() {
  const out = $("alloc-out");
  try {
    const workloads = numbers($("alloc-w").value);
    const caps = numbers($("alloc-caps").value);
    const req = { workloads, budget: Number($("alloc-b").value) };
    if (caps.length > 0) req.caps = caps;
    const r = JSON.parse(allocate_cores(JSON.stringify(req)));
    const max = Math.max(...r.per_core);
    const rows = workloads.map((w, i) => [i, i === r.bottleneck_layer ? "bottleneck" : "", w, r.nc_count[i], r.per_core[i].toFixed(1), bar(r.per_core[i], max)]);
    out.replaceChildren(table(["layer", "", "W", "cores", "W / N", ""], rows));
  } catch (e) {
    fail(out, e);
  }
}

function runSimulate() {
  const out = $("sim-out");
  try {
    const topology = $("sim-topo").value.trim();
    const req = { topology, seed: Number($("sim-seed").value), density: Number($("sim-density").value) };
    if (topology !== "calibration") req.classes = Number($("sim-classes").value);
    const nc = numbers($("sim-nc").value);
    if (nc.length > 0) req.nc_count = nc;
    const r = JSON.parse(simulate(JSON.stringify(req)));
    const rep = r.report;
    const max = Math.max(...rep.cycles.layers.map((l) => l.layer_total));
    const rows = rep.layers.map((l, i) => {
      const c = rep.cycles.layers[i];
      return [l.layer, l.kind, l.nc_count ?? "-", l.input_spikes, l.output_spikes, l.workload, c.layer_total, bar(c.layer_total, max)];
    });
    const summary = document.createElement("p");
    const cls = rep.no_spike ? `${rep.predicted_class} (no output spikes)` : rep.predicted_class;
    summary.textContent = `class ${cls}; latency ${rep.cycles.network_total} cycles, ${rep.cycles.fps.toFixed(1)} FPS at ${rep.cycles.clock_hz / 1e6} MHz; dense reference ${r.oracle_match ? "agrees bit for bit" : "DISAGREES"}`;
    out.replaceChildren(summary, table(["layer", "kind", "cores", "in spikes", "out spikes", "W", "cycles", ""], rows));
  } catch (e) {
    fail(out, e);
  }
}

await init();
$("penc-run").addEventListener("click", runPenc);
$("alloc-run").addEventListener("click", runAllocate);
$("sim-run").addEventListener("click", runSimulate);
runPenc();
runAllocate();
