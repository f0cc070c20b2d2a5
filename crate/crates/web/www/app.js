import init, { baseline, simulate, score, scenarios } from "./pkg/rttwatch_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const fmt = (v, d = 3) => (v === null || v === undefined ? "-" : v.toFixed(d));

function fail(where, e) {
  where.innerHTML = `<tr><td class="err">${e.message ?? e}</td></tr>`;
}

function runBaseline() {
  const t = $("baseline-table");
  try {
    const r = JSON.parse(baseline(num("seed"), num("bframes")));
    const rows = [
      ["mean RTT (ms)", (s) => s.mean],
      ["raw std (ms)", (s) => s.raw_std],
      ["raw mean + 3 std", (s) => s.raw_cutoff],
      ["frame std (ms)", (s) => s.frame_std],
      ["frame mean + 3 std", (s) => s.frame_cutoff],
    ];
    t.innerHTML =
      "<tr><th>metric</th><th>run 1</th><th>run 2</th><th>overall</th></tr>" +
      rows
        .map(([n, f]) => `<tr><td>${n}</td>${[r.runs[0], r.runs[1], r.overall].map((s) => `<td>${fmt(f(s))}</td>`).join("")}</tr>`)
        .join("");
    $("cutoff").value = r.threshold.cutoff.toFixed(3);
  } catch (e) {
    fail(t, e);
  }
}

function draw(s) {
  const c = $("plot");
  const g = c.getContext("2d");
  const W = c.width, H = c.height, pad = 50;
  g.clearRect(0, 0, W, H);
  const n = s.avg_rtt.length;
  const hi = Math.max(s.cutoff, ...s.avg_rtt) * 1.08;
  const x = (i) => pad + ((W - 2 * pad) * i) / Math.max(1, n - 1);
  const y = (v) => H - pad - ((H - 2 * pad) * v) / hi;

  g.strokeStyle = "#999";
  g.lineWidth = 2;
  g.beginPath();
  g.moveTo(pad, pad / 2);
  g.lineTo(pad, H - pad);
  g.lineTo(W - pad / 2, H - pad);
  g.stroke();
  g.fillStyle = "#555";
  g.font = "22px system-ui";
  for (let k = 0; k <= 4; k++) {
    const v = (hi * k) / 4;
    g.fillText(v.toFixed(1), 4, y(v) + 7);
  }
  g.fillText("frame", W - pad - 60, H - 12);

  g.strokeStyle = "#c33";
  g.setLineDash([12, 8]);
  g.beginPath();
  g.moveTo(pad, y(s.cutoff));
  g.lineTo(W - pad / 2, y(s.cutoff));
  g.stroke();
  g.setLineDash([]);

  g.strokeStyle = "#36c";
  g.lineWidth = 1.5;
  g.beginPath();
  s.avg_rtt.forEach((v, i) => (i ? g.lineTo(x(i), y(v)) : g.moveTo(x(i), y(v))));
  g.stroke();
  s.avg_rtt.forEach((v, i) => {
    g.fillStyle = s.anomalous[i] ? "#c33" : "#36c";
    g.fillRect(x(i) - 3, y(v) - 3, 6, 6);
  });
}

function runSim() {
  const out = $("sim-summary");
  try {
    const s = JSON.parse(simulate(num("seed"), $("scenario").value, num("sframes"), num("cutoff")));
    const anomalous = s.anomalous.filter(Boolean).length;
    out.innerHTML =
      `${s.scenario}: ${anomalous} of ${s.anomalous.length} frames anomalous; ` +
      `expected class <b>${s.expected}</b>, purity ${(100 * s.purity).toFixed(1)}%`;
    draw(s);
  } catch (e) {
    out.innerHTML = `<span class="err">${e.message ?? e}</span>`;
  }
}

function runScore() {
  const t = $("score-table");
  try {
    const m = JSON.parse(score(num("tp"), num("fp"), num("fn"), num("tn")));
    t.innerHTML = ["accuracy", "precision", "recall", "f1"]
      .map((k) => `<tr><td>${k}</td><td>${fmt(m[k], 4)}</td></tr>`)
      .join("");
  } catch (e) {
    fail(t, e);
  }
}

await init();
for (const name of JSON.parse(scenarios())) {
  const o = document.createElement("option");
  o.textContent = name;
  if (name === "cpu/high") o.selected = true;
  $("scenario").appendChild(o);
}
$("run-baseline").onclick = runBaseline;
$("run-sim").onclick = runSim;
$("run-score").onclick = runScore;
$("status").textContent = "ready";
runBaseline();
runSim();
runScore();
