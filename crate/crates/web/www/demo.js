import init, { fit, cluster, complete } from "./pkg/symplane_web.js";

const $ = (id) => document.getElementById(id);
const palette = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

function common() {
  return { shape: $("shape").value, k: Number($("k").value), seed: Number($("seed").value) };
}

// world (x, y) to canvas pixels, y up
function viewport(canvas, scene) {
  const s = canvas.width / (2 * scene.radius);
  return ([x, y]) => [(x - scene.center[0]) * s + canvas.width / 2, canvas.height / 2 - (y - scene.center[1]) * s];
}

function dots(ctx, map, points, color, size) {
  ctx.fillStyle = color;
  for (const p of points) {
    const [u, v] = map(p);
    ctx.fillRect(u - size / 2, v - size / 2, size, size);
  }
}

function line(ctx, map, l, reach, color, dashed) {
  const a = map([l.point[0] - reach * l.direction[0], l.point[1] - reach * l.direction[1]]);
  const b = map([l.point[0] + reach * l.direction[0], l.point[1] + reach * l.direction[1]]);
  ctx.strokeStyle = color;
  ctx.lineWidth = dashed ? 1 : 2;
  ctx.setLineDash(dashed ? [5, 4] : []);
  ctx.beginPath();
  ctx.moveTo(...a);
  ctx.lineTo(...b);
  ctx.stroke();
  ctx.setLineDash([]);
}

function drawScene(canvas, scene) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const map = viewport(canvas, scene);
  dots(ctx, map, scene.points, "#bbb", 2);
  for (const l of scene.planes) line(ctx, map, l, 1e3, "#888", true);
  return { ctx, map };
}

function report(id, f) {
  try {
    $(id).classList.remove("error");
    $(id).textContent = f();
  } catch (e) {
    $(id).classList.add("error");
    $(id).textContent = String(e);
  }
}

function runFit() {
  report("fit-out", () => {
    const { shape, k, seed } = common();
    const plane = seed % k;
    const view = JSON.parse(fit(shape, k, plane, Number($("fit-count").value), Number($("fit-noise").value), Number($("fit-outliers").value), seed));
    const { ctx, map } = drawScene($("fit-canvas"), view.scene);
    ctx.strokeStyle = "rgba(31, 119, 180, 0.35)";
    ctx.lineWidth = 1;
    for (const [ax, ay, bx, by] of view.pairs) {
      ctx.beginPath();
      ctx.moveTo(...map([ax, ay]));
      ctx.lineTo(...map([bx, by]));
      ctx.stroke();
    }
    line(ctx, map, view.fitted, 1e3, palette[0], false);
    return `plane ${plane}: ${view.inliers} of ${view.total} pairs are inliers\n` +
      `normal error ${view.angle_error_deg.toFixed(4)} deg\noffset error ${(100 * view.offset_error).toFixed(4)} % of diameter`;
  });
}

function runCluster() {
  report("cluster-out", () => {
    const { shape, k, seed } = common();
    const view = JSON.parse(cluster(shape, k, 30, Number($("cl-angle").value), Number($("cl-outliers").value), Number($("cl-eps").value), Number($("cl-min").value), seed));
    const { ctx, map } = drawScene($("cluster-canvas"), view.scene);
    view.clusters.forEach((l, i) => line(ctx, map, l, 1e3, palette[i % palette.length], false));

    const space = $("cluster-space");
    const sctx = space.getContext("2d");
    sctx.clearRect(0, 0, space.width, space.height);
    sctx.fillStyle = "#666";
    sctx.fillText("normal azimuth (deg) vs offset / diameter", 8, 14);
    for (const c of view.candidates) {
      const u = (c.azimuth_deg / 180) * space.width;
      const v = space.height / 2 - c.offset * space.height;
      sctx.fillStyle = c.cluster < 0 ? "#ccc" : palette[c.cluster % palette.length];
      sctx.fillRect(u - 2, v - 2, 4, 4);
    }
    const noise = view.candidates.filter((c) => c.cluster < 0).length;
    return `${view.clusters.length} clusters (scene has ${view.expected} planes)\n` +
      `supports: ${view.supports.join(", ")}\n${noise} candidates left as noise`;
  });
}

function runComplete() {
  report("complete-out", () => {
    const { shape, k, seed } = common();
    const view = JSON.parse(complete(shape, k, Number($("co-used").value), Number($("co-depth").value), seed));
    const { ctx, map } = drawScene($("complete-canvas"), view.scene);
    dots(ctx, map, view.added, palette[1], 3);
    dots(ctx, map, view.input, palette[0], 3);
    return `${view.input.length} input points (red), ${view.added.length} added by reflection (blue)\n` +
      `largest gap to the full cloud: ${view.max_gap.toExponential(2)} of diameter`;
  });
}

function showValues() {
  for (const input of document.querySelectorAll("input[type=range]")) {
    input.nextElementSibling.textContent = input.value;
  }
}

await init();
for (const input of document.querySelectorAll("input[type=range]")) input.addEventListener("input", showValues);
$("fit-run").addEventListener("click", runFit);
$("cluster-run").addEventListener("click", runCluster);
$("complete-run").addEventListener("click", runComplete);
for (const id of ["shape", "k", "seed"]) $(id).addEventListener("change", () => { runFit(); runCluster(); runComplete(); });
showValues();
runFit();
runCluster();
runComplete();
