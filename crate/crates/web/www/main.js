import init, { Demo } from "./pkg/groupsparse_web.js";

const $ = (id) => document.getElementById(id);
let demo;

function tau() {
  return Math.pow(10, Number($("tau").value));
}

function drawMap(pixels, shape) {
  const [rows, cols] = shape ?? [1, pixels.length];
  const canvas = $("map");
  const cell = Math.floor(Math.min(320 / cols, 160 / rows));
  canvas.width = cols * cell;
  canvas.height = rows * cell;
  const ctx = canvas.getContext("2d");
  pixels.forEach((p, i) => {
    ctx.fillStyle = `rgb(${p},${p},${p})`;
    ctx.fillRect((i % cols) * cell, Math.floor(i / cols) * cell, cell, cell);
  });
}

function show(json) {
  const r = JSON.parse(json);
  if (r.error) {
    $("status").innerHTML = `<span class="err">${r.error}</span>`;
    return;
  }
  $("status").textContent = "";
  drawMap(r.pixels, r.image_shape);
  const rows = [
    ["penalty / λ", `${r.penalty} / ${r.lambda}`],
    ["threshold", r.threshold.toExponential(1)],
    ["train accuracy", r.train_accuracy.toFixed(4)],
    ["test accuracy", r.test_accuracy.toFixed(4)],
    ["sparsity per layer", r.report.sparsity.map((s) => s.toFixed(3)).join(" / ")],
    ["total sparsity", r.report.total_sparsity.toFixed(3)],
    ["inputs kept", `${r.report.selected_feature_count} of ${r.report.original_dims[0]}`],
    ["compacted dims", r.report.compacted_dims.join("-")],
    ["final objective", r.objective.at(-1).toFixed(5)],
  ];
  $("stats").innerHTML = rows.map(([k, v]) => `<tr><td>${k}</td><td>${v}</td></tr>`).join("");
}

$("train").onclick = () => {
  $("status").textContent = "training…";
  // let the status paint before the synchronous call blocks the page
  setTimeout(() => {
    const args = [$("penalty").value, Number($("lambda").value), Number($("epochs").value), Number($("seed").value)];
    show($("data").value === "digits" ? demo.train_digits(...args) : demo.train_blobs(...args));
    show(demo.prune(tau()));
  }, 20);
};

$("tau").oninput = () => {
  $("tauval").textContent = tau().toExponential(1);
  if (demo) show(demo.prune(tau()));
};

await init();
demo = new Demo();
