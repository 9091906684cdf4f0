import init, { segregate, transpose_conv, layer_cost } from "./pkg/segconv_web.js";

const CLASS_COLORS = ["#f6d6d6", "#d6e6f6", "#d9f2d6", "#f3ecd0"];
const CELL = 34;

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function drawGrid(title, grid, classes, highlight) {
  const canvas = document.createElement("canvas");
  canvas.width = grid.cols * CELL + 1;
  canvas.height = grid.rows * CELL + 1;
  const ctx = canvas.getContext("2d");
  ctx.font = "11px monospace";
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  for (let r = 0; r < grid.rows; r++) {
    for (let c = 0; c < grid.cols; c++) {
      const i = r * grid.cols + c;
      const v = grid.data[i];
      ctx.fillStyle = classes ? CLASS_COLORS[classes[i]] : highlight ?? "#fff";
      if (!classes && v === 0 && !highlight) ctx.fillStyle = "#eee";
      ctx.fillRect(c * CELL, r * CELL, CELL, CELL);
      ctx.strokeStyle = "#999";
      ctx.strokeRect(c * CELL + 0.5, r * CELL + 0.5, CELL, CELL);
      ctx.fillStyle = "#222";
      ctx.fillText(Number.isInteger(v) ? String(v) : v.toFixed(2), c * CELL + CELL / 2, r * CELL + CELL / 2);
    }
  }
  const fig = document.createElement("figure");
  fig.append(canvas);
  const cap = document.createElement("figcaption");
  cap.textContent = `${title} (${grid.rows}×${grid.cols})`;
  fig.append(cap);
  return fig;
}

function guard(out, fn) {
  try {
    fn();
  } catch (e) {
    out.replaceChildren(Object.assign(document.createElement("p"), { className: "error", textContent: String(e) }));
  }
}

function renderSegregation() {
  const out = $("seg-out");
  guard(out, () => {
    const v = JSON.parse(segregate(num("seg-n"), num("seg-seed")));
    out.replaceChildren(
      drawGrid("kernel K", v.kernel, v.class_of),
      ...v.subkernels.map((g, k) => drawGrid(["k00", "k01", "k10", "k11"][k], g, null, CLASS_COLORS[k])),
    );
  });
}

function renderConv() {
  const out = $("conv-out");
  $("conv-summary").textContent = "";
  guard(out, () => {
    const v = JSON.parse(transpose_conv(num("conv-size"), num("conv-n"), num("conv-pad"), num("conv-seed")));
    $("conv-summary").textContent =
      `multiplications: reference ${v.mults_reference}, segregated ${v.mults_segregated} ` +
      `(${(v.mults_reference / v.mults_segregated).toFixed(2)}× fewer); ` +
      `max |difference| ${v.max_abs_diff}; class rows/cols swapped: ${v.swap}`;
    out.replaceChildren(
      drawGrid("input", v.input),
      drawGrid("upsampled + padded (reference)", v.upsampled),
      drawGrid("padded input (segregated)", v.seg_input),
      drawGrid("output, coloured by sub-kernel", v.segregated, v.class_of_output),
    );
  });
}

function renderCost() {
  const out = $("cost-out");
  guard(out, () => {
    const v = JSON.parse(layer_cost(num("cost-size"), num("cost-n"), num("cost-pad"), num("cost-cin"), num("cost-cout")));
    const rows = [
      ["output", `${v.output[0]} × ${v.output[1]}`],
      ["multiplications, reference", v.mults_reference.toLocaleString()],
      ["multiplications, segregated", v.mults_segregated.toLocaleString()],
      ["ratio", v.ratio.toFixed(3)],
      ["memory saved (upsampled buffer)", `${v.savings_total_bytes.toLocaleString()} B`],
      ["memory saved (net of padded input)", `${v.savings_net_bytes.toLocaleString()} B`],
    ];
    out.replaceChildren(
      ...rows.map(([k, val]) => {
        const tr = document.createElement("tr");
        tr.innerHTML = `<td>${k}</td><td><b>${val}</b></td>`;
        return tr;
      }),
    );
  });
}

await init();
CLASS_COLORS.forEach((c, k) => ($(`lg${k}`).style.background = c));
for (const [prefix, render] of [["seg", renderSegregation], ["conv", renderConv], ["cost", renderCost]]) {
  document.querySelectorAll(`input[id^=${prefix}-]`).forEach((el) => el.addEventListener("input", render));
  render();
}
