"""Closed-form parameter and FLOP counts for a layer chain.

FLOP convention (per sample, batch 1): a multiply-accumulate is 2 FLOPs, a
bias add or any other elementwise add/multiply is 1, a non-linear activation
costs 1 per element (linear costs nothing), and max pooling costs ``K - 1``
comparisons per output element. An LSTM step costs, per gate, the two
matrix-vector products plus one add joining them and one bias add; then five
activations per unit (three gates, candidate, ``tanh(c)``) and four
elementwise ops for the state update.
"""

from .layers import infer_shapes


def layer_params(spec, input_shape):
    if spec.kind == "dense":
        return input_shape[0] * spec.units + spec.units
    if spec.kind == "conv1d":
        return spec.kernel * input_shape[1] * spec.units + spec.units
    if spec.kind == "lstm":
        u = spec.units
        return 4 * (u * (input_shape[1] + u) + u)
    return 0


def _act(spec):
    return 0 if spec.activation == "linear" else 1


def layer_flops(spec, input_shape, output_shape):
    if spec.kind == "dense":
        n_in, n_out = input_shape[0], spec.units
        return 2 * n_in * n_out + n_out + _act(spec) * n_out
    if spec.kind == "conv1d":
        out_len, f = output_shape
        per_output = 2 * spec.kernel * input_shape[1] + 1 + _act(spec)
        return out_len * f * per_output
    if spec.kind == "maxpool1d":
        out_len, c = output_shape
        return out_len * c * (spec.kernel - 1)
    if spec.kind == "lstm":
        steps, c = input_shape
        u = spec.units
        per_step = 4 * (2 * c * u + 2 * u * u + 2 * u) + 5 * u + 4 * u
        return steps * per_step
    return 0


def _walk(specs, input_shape):
    shapes = infer_shapes(specs, input_shape)
    ins = [tuple(input_shape)] + shapes[:-1]
    return zip(specs, ins, shapes)


def count_params(specs, input_shape):
    return sum(layer_params(s, i) for s, i, _ in _walk(specs, input_shape))


def count_flops(specs, input_shape):
    return sum(layer_flops(s, i, o) for s, i, o in _walk(specs, input_shape))


def layer_table(specs, input_shape):
    """Rows of (kind, output shape, params, flops) for reporting."""
    return [(s.kind, o, layer_params(s, i), layer_flops(s, i, o)) for s, i, o in _walk(specs, input_shape)]
