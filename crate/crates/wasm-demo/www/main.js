import init, { copyState, randomState, summary, rmiCurve, exponentCurves } from "./pkg/qia_wasm_demo.js";

const $ = (id) => document.getElementById(id);
const NS = "http://www.w3.org/2000/svg";
let state = null;

function status(msg) {
  $("status").textContent = msg;
}

function el(name, attrs, parent) {
  const e = document.createElementNS(NS, name);
  for (const [k, v] of Object.entries(attrs)) e.setAttribute(k, v);
  parent.appendChild(e);
  return e;
}

// series: [{x: [...], y: [...], color}], nulls and strings in y are skipped
function plot(svg, series, xlabel, ylabel) {
  svg.replaceChildren();
  const W = +svg.getAttribute("width"), H = +svg.getAttribute("height");
  const m = { l: 60, r: 15, t: 15, b: 40 };
  const pts = series.flatMap((s) => s.x.map((x, i) => [x, s.y[i]]).filter(([, y]) => typeof y === "number"));
  if (pts.length === 0) return;
  let [x0, x1] = [Math.min(...pts.map((p) => p[0])), Math.max(...pts.map((p) => p[0]))];
  let [y0, y1] = [Math.min(0, ...pts.map((p) => p[1])), Math.max(...pts.map((p) => p[1]))];
  if (x1 === x0) x1 = x0 + 1;
  if (y1 === y0) y1 = y0 + 1;
  const sx = (x) => m.l + ((x - x0) / (x1 - x0)) * (W - m.l - m.r);
  const sy = (y) => H - m.b - ((y - y0) / (y1 - y0)) * (H - m.t - m.b);
  const g = el("g", { class: "grid" }, svg);
  el("line", { x1: m.l, y1: H - m.b, x2: W - m.r, y2: H - m.b, class: "axis" }, g);
  el("line", { x1: m.l, y1: m.t, x2: m.l, y2: H - m.b, class: "axis" }, g);
  for (let k = 0; k <= 4; k++) {
    const x = x0 + ((x1 - x0) * k) / 4, y = y0 + ((y1 - y0) * k) / 4;
    el("text", { x: sx(x), y: H - m.b + 15, "text-anchor": "middle" }, g).textContent = x.toPrecision(3);
    el("text", { x: m.l - 5, y: sy(y) + 4, "text-anchor": "end" }, g).textContent = y.toPrecision(3);
  }
  el("text", { x: (W + m.l) / 2, y: H - 5, "text-anchor": "middle" }, g).textContent = xlabel;
  el("text", { x: 12, y: m.t + 10 }, g).textContent = ylabel;
  for (const s of series) {
    let d = "", pen = "M";
    s.x.forEach((x, i) => {
      if (typeof s.y[i] !== "number") { pen = "M"; return; }
      d += `${pen}${sx(x).toFixed(1)},${sy(s.y[i]).toFixed(1)} `;
      pen = "L";
    });
    el("path", { d, fill: "none", stroke: s.color, "stroke-width": 2 }, svg);
  }
}

// let the status line repaint before a long synchronous call
function run(label, work) {
  status(label + "...");
  setTimeout(() => {
    try {
      work();
      status("");
    } catch (e) {
      status(String(e.message ?? e));
    }
  }, 10);
}

function loadState() {
  run("Computing summary", () => {
    const src = document.querySelector("input[name=src]:checked").value;
    state = src === "copy" ? copyState(+$("p").value) : randomState(+$("da").value, +$("db").value, +$("seed").value);
    const s = JSON.parse(summary(state));
    const rows = [
      ["dimensions", s.dims.join(" × ")],
      ["mutual information", s.mutual_information],
      ["information variance", s.variance],
      ["lower rate threshold", s.r_half],
      ["upper rate threshold", s.r_inf],
    ];
    $("summary").replaceChildren(...rows.map(([k, v]) => {
      const tr = document.createElement("tr");
      tr.innerHTML = `<td>${k}</td><td>${typeof v === "number" ? v.toPrecision(8) : v}</td>`;
      return tr;
    }));
  });
}

function plotRmi() {
  if (!state) return status("Load a state first");
  run("Minimizing", () => {
    const c = JSON.parse(rmiCurve(state, $("variant").value, +$("amin").value, +$("amax").value, +$("apts").value));
    plot($("rmi-plot"), [{ x: c.alpha, y: c.value, color: "#1f77b4" }], "order", "information (nats)");
  });
}

function plotExponents() {
  if (!state) return status("Load a state first");
  run("Computing exponents", () => {
    const c = JSON.parse(exponentCurves(state, +$("epts").value));
    plot($("exp-plot"), [
      { x: c.direct.rate, y: c.direct.exponent, color: "#2ca02c" },
      { x: c.strong_converse.rate, y: c.strong_converse.exponent, color: "#d62728" },
    ], "rate (nats)", "exponent");
  });
}

await init();
$("load").onclick = loadState;
$("rmi").onclick = plotRmi;
$("exp").onclick = plotExponents;
loadState();
