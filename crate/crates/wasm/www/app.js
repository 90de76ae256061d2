import init, { simulateView, sweep, samplePrompts, version } from "./pkg/embedlens_wasm.js";

const $ = (id) => document.getElementById(id);
const palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"];
const labels = {
  centroid_accuracy: "centroid accuracy",
  knn1_accuracy: "knn1 accuracy",
  knn5_accuracy: "knn5 accuracy",
  reference_centroid_distance: "reference centroid distance",
  query_centroid_distance: "query centroid distance",
  mean_centroid_shift: "mean centroid shift",
  frechet_distance: "Fréchet distance",
};

function spec() {
  return {
    dimension: +$("dimension").value,
    classes: +$("classes").value,
    samples: +$("samples").value,
    spread: +$("spread").value,
    shift_degrees: +$("shift").value,
    outlier_fraction: +$("outliers").value,
    seed: +$("seed").value,
  };
}

function guard(f) {
  try {
    $("error").textContent = "";
    f();
  } catch (e) {
    $("error").textContent = String(e);
  }
}

function drawScatter(points) {
  const c = $("scatter"), g = c.getContext("2d");
  const s = c.width / 2.2, o = c.width / 2;
  g.clearRect(0, 0, c.width, c.height);
  g.strokeStyle = "#ddd";
  g.beginPath(); g.arc(o, o, s, 0, 2 * Math.PI); g.stroke();
  for (const p of points) {
    g.fillStyle = palette[p.class_id % palette.length];
    const x = o + s * p.x, y = o - s * p.y;
    if (p.query) {
      g.fillRect(x - 2, y - 2, 4, 4);
    } else {
      g.beginPath(); g.arc(x, y, 2.2, 0, 2 * Math.PI); g.fill();
    }
  }
  g.fillStyle = "#444";
  g.fillText("circles: references, squares: queries", 8, c.height - 8);
}

function drawCurve(points, param) {
  const c = $("curve"), g = c.getContext("2d");
  const pad = 36, w = c.width - 2 * pad, h = c.height - 2 * pad;
  const xs = points.map((p) => p.value);
  const x0 = Math.min(...xs), x1 = Math.max(...xs);
  const series = [["centroid_accuracy", "#1f77b4"], ["knn5_accuracy", "#2ca02c"], ["mean_centroid_shift", "#d62728"]];
  g.clearRect(0, 0, c.width, c.height);
  g.strokeStyle = "#999";
  g.strokeRect(pad, pad, w, h);
  series.forEach(([key, color], i) => {
    g.strokeStyle = color;
    g.beginPath();
    points.forEach((p, j) => {
      const x = pad + (w * (p.value - x0)) / (x1 - x0 || 1);
      const y = pad + h * (1 - Math.min(1, p.summary[key]));
      j ? g.lineTo(x, y) : g.moveTo(x, y);
    });
    g.stroke();
    g.fillStyle = color;
    g.fillText(labels[key], pad + 6, pad + 14 + 14 * i);
  });
  g.fillStyle = "#444";
  g.fillText(`${param}: ${x0} to ${x1}`, pad, c.height - 10);
  g.fillText("1", pad - 12, pad + 4);
  g.fillText("0", pad - 12, pad + h + 4);
}

function refresh() {
  for (const id of ["spread", "shift", "outliers"]) $(`${id}-v`).textContent = $(id).value;
  guard(() => {
    const view = JSON.parse(simulateView(JSON.stringify(spec())));
    drawScatter(view.points);
    $("summary").innerHTML = Object.entries(labels)
      .map(([k, name]) => `<tr><td>${name}</td><td>${view.summary[k].toFixed(4)}</td></tr>`)
      .join("");
  });
}

function refreshCurve() {
  const param = $("sweep-param").value;
  const values = param === "shift"
    ? Array.from({ length: 19 }, (_, i) => i * 10)
    : Array.from({ length: 11 }, (_, i) => i * 0.05);
  guard(() => drawCurve(JSON.parse(sweep(JSON.stringify(spec()), param, JSON.stringify(values))), param));
}

function prompts() {
  guard(() => {
    const list = JSON.parse(samplePrompts($("class-name").value, +$("prompt-count").value, +$("seed").value));
    $("prompts").innerHTML = "";
    for (const p of list) {
      const li = document.createElement("li");
      li.textContent = p;
      $("prompts").append(li);
    }
  });
}

await init();
document.title = `embedlens ${version()}`;
for (const id of ["dimension", "classes", "samples", "spread", "shift", "outliers", "seed"]) {
  $(id).addEventListener("input", () => { refresh(); refreshCurve(); });
}
$("sweep-param").addEventListener("change", refreshCurve);
$("prompt-go").addEventListener("click", prompts);
refresh();
refreshCurve();
prompts();
