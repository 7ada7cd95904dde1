import init, { signal_srop, image_srop, pool_ladder } from "./pkg/sropkit_web.js";

const $ = (id) => document.getElementById(id);

function showError(el, e) {
  el.className = "out err";
  el.textContent = String(e);
}

function showText(el, text) {
  el.className = "out";
  el.textContent = text;
}

// Bars for values with a red marker at `mark`.
function bars(canvas, values, mark) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const max = Math.max(...values) || 1;
  const bw = w / values.length;
  ctx.fillStyle = "#1f77b4";
  values.forEach((v, i) => {
    const bh = (v / max) * (h - 14);
    ctx.fillRect(i * bw, h - bh, Math.max(bw - 1, 1), bh);
  });
  if (mark !== undefined) {
    ctx.fillStyle = "#d62728";
    ctx.fillRect(mark * bw + bw / 2 - 1, 0, 2, h);
  }
}

function gray(canvas, n, pixels) {
  const tmp = document.createElement("canvas");
  tmp.width = tmp.height = n;
  const img = tmp.getContext("2d").createImageData(n, n);
  pixels.forEach((v, i) => {
    img.data.set([v, v, v, 255], 4 * i);
  });
  tmp.getContext("2d").putImageData(img, 0, 0);
  const ctx = canvas.getContext("2d");
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
}

function runSignal() {
  try {
    const r = JSON.parse(signal_srop($("sig-text").value, Number($("sig-kappa").value)));
    bars($("sig-plot"), r.values, r.bin - r.band_lo);
    showText($("sig-out"), `bins ${r.band_lo}..${r.band_hi}, SROP bin ${r.bin}, normalized ${r.normalized.toFixed(4)}`);
  } catch (e) {
    showError($("sig-out"), e);
  }
}

function series(f, n = 64) {
  return Array.from({ length: n }, (_, t) => f(t).toFixed(4)).join(" ");
}

function patternArgs() {
  return [$("img-kind").value, Number($("img-size").value), Number($("img-param").value), Number($("img-seed").value)];
}

function runImage() {
  $("img-param-v").textContent = $("img-param").value;
  $("img-kappa-v").textContent = Number($("img-kappa").value).toFixed(2);
  try {
    const r = JSON.parse(image_srop(...patternArgs(), Number($("img-kappa").value)));
    gray($("img-pixels"), r.n, r.image);
    gray($("img-spectrum"), r.n, r.spectrum);
    bars($("img-profile"), r.profile, r.bin);
    showText(
      $("img-out"),
      `m = ${r.m} radial bins, SROP bin ${r.bin}, normalized ${r.normalized.toFixed(4)}, ` +
        `corner energy dropped ${(100 * r.dropped_fraction).toFixed(2)}%`,
    );
  } catch (e) {
    showError($("img-out"), e);
  }
}

function runLadder() {
  const table = $("lad-table");
  try {
    const { levels } = JSON.parse(pool_ladder(...patternArgs(), Number($("img-kappa").value)));
    bars($("lad-plot"), levels.map((l) => l.normalized ?? 0));
    table.innerHTML = "<tr><th>level</th><th>size</th><th>SROP</th></tr>";
    for (const l of levels) {
      const row = table.insertRow();
      const v = l.normalized === null ? "no energy" : l.normalized.toFixed(4);
      [l.name, l.size, v].forEach((x) => (row.insertCell().textContent = x));
    }
  } catch (e) {
    table.innerHTML = "";
    table.insertRow().insertCell().textContent = String(e);
  }
}

await init();

$("sig-sine").onclick = () => {
  $("sig-text").value = series((t) => Math.sin((2 * Math.PI * 5 * t) / 64));
  runSignal();
};
$("sig-noise").onclick = () => {
  $("sig-text").value = series(() => Math.random() * 2 - 1);
  runSignal();
};
$("sig-step").onclick = () => {
  $("sig-text").value = series((t) => (t < 32 ? 0 : 1));
  runSignal();
};
$("sig-run").onclick = runSignal;
$("sig-kappa").onchange = runSignal;
for (const id of ["img-kind", "img-size", "img-param", "img-seed", "img-kappa"]) {
  $(id).oninput = runImage;
}
$("lad-run").onclick = runLadder;

$("sig-sine").onclick();
runImage();
