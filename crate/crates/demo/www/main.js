import init, { bwt_view, counter_steps, compress } from "./pkg/hkt_demo.js";

const $ = (id) => document.getElementById(id);
const esc = (s) => s.replace(/[&<>]/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;" })[c]);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

function showBwt() {
  const out = $("bwt-out");
  const text = $("bwt-in").value;
  if (!text) { out.textContent = ""; return; }
  try {
    const v = JSON.parse(bwt_view(text));
    let html = `<p>last column <code>${esc(v.last)}</code>, primary row ${v.primary}, ` +
      `${v.runs} runs for ${text.length} symbols${v.periodic ? ", periodic input" : ""}</p>`;
    if (v.rows.length) {
      const lines = v.rows.map((r, i) => {
        const body = esc(r.slice(0, -1)) + "<b>" + esc(r.slice(-1)) + "</b>";
        const line = `${String(i).padStart(3)}  ${body}`;
        return i === v.primary ? `<mark>${line}</mark>` : line;
      });
      html += `<pre>${lines.join("\n")}</pre>`;
    } else {
      html += "<p>(rotation table shown for inputs up to 64 characters)</p>";
    }
    out.innerHTML = html;
  } catch (e) {
    out.innerHTML = `<p class="err">${esc(String(e))}</p>`;
  }
}

function showCounters() {
  const steps = Number($("steps").value);
  $("steps-label").textContent = steps;
  const v = JSON.parse(counter_steps(steps));
  const cv = $("counter");
  const g = cv.getContext("2d");
  const pad = 30, w = cv.width - 2 * pad, h = cv.height - 2 * pad;
  g.clearRect(0, 0, cv.width, cv.height);
  g.strokeStyle = "#aaa";
  g.setLineDash([4, 4]);
  g.beginPath();
  g.moveTo(pad, pad + h / 2);
  g.lineTo(pad + w, pad + h / 2);
  g.stroke();
  g.setLineDash([]);
  g.strokeRect(pad, pad, w, h);
  v.series.forEach((s, k) => {
    g.strokeStyle = COLORS[k];
    g.lineWidth = 2;
    g.beginPath();
    g.moveTo(pad, pad + h);
    s.values.forEach((y, i) => g.lineTo(pad + (w * (i + 1)) / steps, pad + h - (h * y) / v.max));
    g.stroke();
  });
  $("counter-legend").innerHTML = v.series
    .map((s, k) => `<span style="color:${COLORS[k]}">τ=${s.tau}: half-way after ${s.half_life ?? "&gt; " + steps} steps</span>`)
    .join(" &nbsp; ");
}

function randomGenome() {
  let x = 0x9e3779b9 ^ Date.now();
  const rnd = () => ((x = (x * 1103515245 + 12345) >>> 0) >>> 16) / 65536;
  const repeat = [];
  for (let i = 0; i < 400; i++) repeat.push("ACGT"[Math.floor(rnd() * 4)]);
  let out = "";
  for (let r = 0; r < 3; r++) {
    out += `>contig${r + 1} synthetic\n`;
    let seq = "";
    while (seq.length < 40000) {
      if (rnd() < 0.1) seq += repeat.join("");
      else seq += "ACGT"[Math.floor(rnd() * 4)];
    }
    for (let i = 0; i < seq.length; i += 60) out += seq.slice(i, i + 60) + "\n";
  }
  $("fa").value = out;
}

function drawBars(streams) {
  const cv = $("bars");
  const g = cv.getContext("2d");
  g.clearRect(0, 0, cv.width, cv.height);
  const max = Math.max(1, ...streams.map((s) => s.raw));
  const rowH = cv.height / Math.max(1, streams.length);
  g.font = "12px system-ui";
  streams.forEach((s, i) => {
    const y = i * rowH;
    const scale = (cv.width - 140) / max;
    g.fillStyle = "#ddd";
    g.fillRect(110, y + 4, s.raw * scale, rowH - 8);
    g.fillStyle = COLORS[i % COLORS.length];
    g.fillRect(110, y + 4, s.compressed * scale, rowH - 8);
    g.fillStyle = "#222";
    g.fillText(s.stream, 4, y + rowH / 2 + 4);
  });
}

function runCompress() {
  const out = $("cmp-out");
  const text = $("fa").value;
  try {
    const t0 = performance.now();
    const v = JSON.parse(compress(text, $("codec").value, Number($("block").value)));
    const ms = performance.now() - t0;
    const rows = v.streams
      .map((s) => `<tr><td>${s.stream}</td><td>${s.codec}</td><td>${s.raw}</td><td>${s.compressed}</td></tr>`)
      .join("");
    out.innerHTML =
      `<p>${v.input_bytes} → ${v.output_bytes} bytes, <b>${v.bpb.toFixed(4)} bits/byte</b>, ` +
      `${v.records} records, NUC packing ${v.nuc_width ?? "none"}, round trip ${v.roundtrip ? "ok" : "FAILED"}, ` +
      `${ms.toFixed(0)} ms</p>` +
      `<table><tr><th>stream</th><th>codec</th><th>raw</th><th>compressed</th></tr>${rows}</table>`;
    drawBars(v.streams);
  } catch (e) {
    out.innerHTML = `<p class="err">${esc(String(e))}</p>`;
  }
}

await init();
$("bwt-in").addEventListener("input", showBwt);
$("steps").addEventListener("input", showCounters);
$("random").addEventListener("click", randomGenome);
$("run").addEventListener("click", runCompress);
$("file").addEventListener("change", async (e) => {
  const f = e.target.files[0];
  if (f) $("fa").value = await f.text();
});
showBwt();
showCounters();
randomGenome();
