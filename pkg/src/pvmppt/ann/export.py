"""Weight files: a portable text format and a free-standing C translation unit.

Portable text (``mlpw-1``)::

    format = mlpw-1              (first non-comment line, outside any section)
    [meta]          layer_sizes, hidden_activation, output_activation
    [normalization] <column>.min / <column>.max for every column
    [layer N]       rows, cols, weights (row-major), biases

Numbers carry 17 significant digits, enough to round-trip any double.
"""

from __future__ import annotations

import numpy as np

from .. import kvfile
from .activations import Activation
from .network import MlpNetwork

FORMAT_TAG = "mlpw-1"


class ExportError(ValueError):
    pass


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _nums(values) -> str:
    return ", ".join(_num(x) for x in np.ravel(values))


def _check_finite(net: MlpNetwork):
    if not np.all(np.isfinite(net.params)):
        raise ExportError("refusing to export non-finite weights")


def to_portable_text(net: MlpNetwork, norm=None) -> str:
    _check_finite(net)
    lines = [f"format = {FORMAT_TAG}", "", "[meta]"]
    lines.append("layer_sizes = " + ", ".join(str(s) for s in net.layer_sizes))
    lines.append(f"hidden_activation = {net.hidden_activation.value}")
    lines.append(f"output_activation = {net.output_activation.value}")
    if norm is not None:
        lines += ["", "[normalization]"]
        lines += [f"{k} = {_num(v)}" for k, v in norm.to_dict().items()]
    for n, (w, b) in enumerate(zip(net.weights, net.biases), 1):
        lines += ["", f"[layer {n}]", f"rows = {w.shape[0]}", f"cols = {w.shape[1]}"]
        lines.append(f"weights = {_nums(w)}")
        lines.append(f"biases = {_nums(b)}")
    return "\n".join(lines) + "\n"


def from_portable_text(text: str):
    """Parse a weight file; returns ``(network, normalization or None)``."""
    from ..dataset import NormalizationParams

    head, _, rest = text.partition("[")
    tag = kvfile.parse(head).get("format")
    if tag != FORMAT_TAG:
        raise ExportError(f"unsupported weight file format {tag!r}")
    sections = kvfile.parse_sections("[" + rest) if rest else []
    meta = dict(next((s for name, s in sections if name == "meta"), {}))
    if not meta:
        raise ExportError("missing [meta] section")
    sizes = [int(s) for s in meta["layer_sizes"].split(",")]
    chunks = []
    layers = [s for name, s in sections if name.startswith("layer ")]
    if len(layers) != len(sizes) - 1:
        raise ExportError(f"expected {len(sizes) - 1} layer sections, found {len(layers)}")
    for (nin, nout), sec in zip(zip(sizes[:-1], sizes[1:]), layers):
        w = np.array([float(x) for x in sec["weights"].split(",")])
        b = np.array([float(x) for x in sec["biases"].split(",")])
        if (int(sec["rows"]), int(sec["cols"])) != (nout, nin) or w.size != nin * nout or b.size != nout:
            raise ExportError("layer shape does not match layer_sizes")
        chunks += [w, b]
    net = MlpNetwork(sizes, np.concatenate(chunks), meta["hidden_activation"], meta["output_activation"])
    norm_sec = next((s for name, s in sections if name == "normalization"), None)
    norm = NormalizationParams.from_dict(norm_sec) if norm_sec else None
    return net, norm


_C_ACTIVATIONS = {
    Activation.TANH: "return tanh(v);",
    Activation.LINEAR: "return v;",
    Activation.RELU: "return v > 0.0 ? v : 0.0;",
    Activation.GELU: "return 0.5 * v * (1.0 + erf(v * 0.70710678118654752));",
    Activation.SELU: (
        "return v > 0.0 ? 1.0507009873554805 * v : 1.0507009873554805 * 1.6732632423543772 * expm1(v);"
    ),
    Activation.SIGMOID: "return 1.0 / (1.0 + exp(-v));",
    Activation.SOFTPLUS: "return (v > 0.0 ? v : 0.0) + log1p(exp(-fabs(v)));",
    Activation.SOFTSIGN: "return v / (1.0 + fabs(v));",
    Activation.SWISH: "return v / (1.0 + exp(-v));",
}


def _c_layer_activation(kind: Activation, name: str) -> str:
    if kind is Activation.SOFTMAX:
        return (
            f"static void {name}(double *v, int n)\n{{\n"
            "    double m = v[0], s = 0.0;\n"
            "    int k;\n"
            "    for (k = 1; k < n; ++k) if (v[k] > m) m = v[k];\n"
            "    for (k = 0; k < n; ++k) { v[k] = exp(v[k] - m); s += v[k]; }\n"
            "    for (k = 0; k < n; ++k) v[k] /= s;\n}\n"
        )
    return (
        f"static double {name}_1(double v) {{ {_C_ACTIVATIONS[kind]} }}\n"
        f"static void {name}(double *v, int n)\n{{\n"
        f"    int k;\n    for (k = 0; k < n; ++k) v[k] = {name}_1(v[k]);\n}}\n"
    )


def to_c_source(net: MlpNetwork, norm=None, prefix: str = "mlp") -> str:
    """C99 source with the weights as constant arrays and an inference function.

    ``<prefix>_forward`` maps normalized inputs to normalized outputs. When
    normalization parameters are given, ``<prefix>_predict`` wraps it with
    input normalization and output denormalization.
    """
    _check_finite(net)
    sizes = net.layer_sizes
    width = max(sizes)
    out = [
        f"/* Generated MLP {'-'.join(map(str, sizes))}, hidden {net.hidden_activation.value},"
        f" output {net.output_activation.value}. */",
        "#include <math.h>",
        "",
        f"#define {prefix.upper()}_N_IN {sizes[0]}",
        f"#define {prefix.upper()}_N_OUT {sizes[-1]}",
        "",
    ]
    for n, (w, b) in enumerate(zip(net.weights, net.biases), 1):
        rows = ",\n".join("    {" + _nums(row) + "}" for row in w)
        out.append(f"static const double {prefix}_w{n}[{w.shape[0]}][{w.shape[1]}] = {{\n{rows}\n}};")
        out.append(f"static const double {prefix}_b{n}[{b.size}] = {{{_nums(b)}}};")
    out.append("")
    out.append(_c_layer_activation(net.hidden_activation, f"{prefix}_act_hidden"))
    if net.output_activation is not net.hidden_activation:
        out.append(_c_layer_activation(net.output_activation, f"{prefix}_act_output"))
        out_act = f"{prefix}_act_output"
    else:
        out_act = f"{prefix}_act_hidden"

    body = [
        f"void {prefix}_forward(const double *x, double *y)",
        "{",
        f"    double a[{width}], z[{width}];",
        "    int j, k;",
        f"    for (j = 0; j < {sizes[0]}; ++j) a[j] = x[j];",
    ]
    last = len(net.weights)
    for n in range(1, last + 1):
        nin, nout = sizes[n - 1], sizes[n]
        act = out_act if n == last else f"{prefix}_act_hidden"
        body += [
            f"    for (k = 0; k < {nout}; ++k) {{",
            "        double acc = 0.0;",
            f"        for (j = 0; j < {nin}; ++j) acc += {prefix}_w{n}[k][j] * a[j];",
            f"        z[k] = acc + {prefix}_b{n}[k];",
            "    }",
            f"    {act}(z, {nout});",
            f"    for (k = 0; k < {nout}; ++k) a[k] = z[k];",
        ]
    body += [f"    for (k = 0; k < {sizes[-1]}; ++k) y[k] = a[k];", "}", ""]
    out += body

    if norm is not None and sizes[-1] == 1:
        lo, hi = norm.minimum, norm.maximum
        n_in = sizes[0]
        out += [
            f"static const double {prefix}_in_min[{n_in}] = {{{_nums(lo[:n_in])}}};",
            f"static const double {prefix}_in_max[{n_in}] = {{{_nums(hi[:n_in])}}};",
            f"static const double {prefix}_out_min = {_num(lo[n_in])};",
            f"static const double {prefix}_out_max = {_num(hi[n_in])};",
            "",
            f"double {prefix}_predict(const double *x)",
            "{",
            f"    double xn[{n_in}], y;",
            "    int j;",
            f"    for (j = 0; j < {n_in}; ++j)",
            f"        xn[j] = 2.0 * (x[j] - {prefix}_in_min[j]) / ({prefix}_in_max[j] - {prefix}_in_min[j]) - 1.0;",
            f"    {prefix}_forward(xn, &y);",
            f"    return (y + 1.0) * 0.5 * ({prefix}_out_max - {prefix}_out_min) + {prefix}_out_min;",
            "}",
            "",
        ]
    return "\n".join(out)


def export_weights(net: MlpNetwork, norm=None, format: str = "portable_text") -> str:
    if format == "portable_text":
        return to_portable_text(net, norm)
    if format == "c_source":
        return to_c_source(net, norm)
    raise ExportError(f"unknown export format {format!r}")


def import_weights(text: str):
    return from_portable_text(text)
