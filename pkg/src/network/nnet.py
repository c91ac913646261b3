#nnet.py
"""
Reader and writer for the NNet text format used by the ACAS Xu networks.

Layout after the `//` comment header:

    numLayers,inputSize,outputSize,maxLayerSize,
    size0,size1,...,sizeL,
    flag,
    input mins
    input maxes
    means   (inputSize + 1 entries, last one for the outputs)
    ranges  (inputSize + 1 entries, last one for the outputs)
    for each layer: one weight row per line, then one bias per line

Every value line may end with a trailing comma. Errors carry the line
number they were detected at.
"""
import logging
from pathlib import Path
from typing import IO, Iterator, List, Tuple, Union

import numpy as np

from src.core.errors import NNetFormatError
from src.network.model import Layer, Network, Normalization

logger = logging.getLogger(__name__)


class _LineReader:
    """Yields (line number, tokens) for every data line."""

    def __init__(self, text: str):
        self._lines: Iterator[Tuple[int, str]] = iter(enumerate(text.splitlines(), start=1))
        self.last_line = 0

    def next_tokens(self) -> Tuple[int, List[str]]:
        for number, raw in self._lines:
            self.last_line = number
            line = raw.strip()
            if not line or line.startswith("//"):
                continue
            tokens = [t.strip() for t in line.split(",")]
            if tokens and tokens[-1] == "":
                tokens.pop()
            return number, tokens
        raise NNetFormatError("truncated file", self.last_line + 1)

    def next_numbers(self, expected: int, kind=float) -> np.ndarray:
        number, tokens = self.next_tokens()
        if len(tokens) != expected:
            raise NNetFormatError(
                f"dimension mismatch: expected {expected} values, found {len(tokens)}", number
            )
        try:
            values = [kind(t) for t in tokens]
        except ValueError:
            bad = next(t for t in tokens if not _is_number(t, kind))
            raise NNetFormatError(f"non-numeric token {bad!r}", number) from None
        return np.array(values, dtype=np.float64 if kind is float else np.int64)


def _is_number(token: str, kind) -> bool:
    try:
        kind(token)
        return True
    except ValueError:
        return False


def load_nnet(source: Union[str, IO[str]], apply_normalization: bool = False) -> Network:
    """
    Parse an NNet document into a `Network`.

    Args:
        source: NNet text, or an open text stream.
        apply_normalization: Fold the input/output normalization into the
            first and last affine layers so the network takes raw inputs.

    Returns:
        Network. The parsed normalization block is kept on
        `network.normalization` in the units the network operates in.

    Raises:
        NNetFormatError: on truncation, dimension mismatch or a non-numeric
            token.
    """
    text = source.read() if hasattr(source, "read") else source
    reader = _LineReader(text)

    header = reader.next_numbers(4, int)
    num_layers, input_size, output_size, _max_size = (int(v) for v in header)
    if num_layers < 1:
        raise NNetFormatError("network must declare at least one layer", reader.last_line)

    sizes = [int(v) for v in reader.next_numbers(num_layers + 1, int)]
    if sizes[0] != input_size or sizes[-1] != output_size:
        raise NNetFormatError(
            f"dimension mismatch: layer sizes {sizes} disagree with header "
            f"input {input_size} / output {output_size}",
            reader.last_line,
        )

    reader.next_tokens()  # unused flag line
    mins = reader.next_numbers(input_size)
    maxes = reader.next_numbers(input_size)
    means = reader.next_numbers(input_size + 1)
    ranges = reader.next_numbers(input_size + 1)

    layers = []
    for k in range(num_layers):
        rows, cols = sizes[k + 1], sizes[k]
        weights = np.vstack([reader.next_numbers(cols) for _ in range(rows)])
        bias = np.array([reader.next_numbers(1)[0] for _ in range(rows)])
        layers.append(Layer(weights=weights, bias=bias, has_relu=k < num_layers - 1))

    if apply_normalization:
        layers = _fold_normalization(layers, means, ranges, input_size)
        normalization = Normalization(
            mins=mins, maxes=maxes,
            means=np.zeros(input_size + 1), ranges=np.ones(input_size + 1),
        )
    else:
        normalization = Normalization(mins=mins, maxes=maxes, means=means, ranges=ranges)

    network = Network(layers=tuple(layers), normalization=normalization)
    logger.debug("loaded NNet network %s", network.describe())
    return network


def _fold_normalization(layers, means, ranges, input_size) -> List[Layer]:
    """Absorb (x - mean) / range on the inputs and y * range + mean on the outputs."""
    in_means = means[:input_size]
    in_ranges = ranges[:input_size]
    out_mean, out_range = means[input_size], ranges[input_size]

    first = layers[0]
    folded = [Layer(
        weights=first.weights / in_ranges,
        bias=first.bias - first.weights @ (in_means / in_ranges),
        has_relu=first.has_relu,
    )] + list(layers[1:])

    last = folded[-1]
    folded[-1] = Layer(
        weights=last.weights * out_range,
        bias=last.bias * out_range + out_mean,
        has_relu=last.has_relu,
    )
    return folded


def read_nnet(path: Union[str, Path], apply_normalization: bool = False) -> Network:
    """Load an NNet file from disk."""
    return load_nnet(Path(path).read_text(), apply_normalization=apply_normalization)


# ---------------------------------------------------
# Writer
# ---------------------------------------------------

def _row(values) -> str:
    return ",".join(repr(float(v)) for v in values) + ","


def dump_nnet(network: Network, comment: str = "generated network") -> str:
    """
    Serialize a network to NNet text.

    Floats are written with `repr` so `load_nnet(dump_nnet(net))` evaluates
    identically. A network without normalization gets the identity block
    over [0, 1].
    """
    norm = network.normalization or Normalization.identity(network.input_dim)
    sizes = [network.input_dim] + [layer.out_dim for layer in network.layers]

    lines = [f"// {comment}"]
    lines.append(",".join(str(v) for v in (
        len(network.layers), network.input_dim, network.output_dim, max(sizes)
    )) + ",")
    lines.append(",".join(str(s) for s in sizes) + ",")
    lines.append("0,")
    lines.append(_row(norm.mins))
    lines.append(_row(norm.maxes))
    lines.append(_row(norm.means))
    lines.append(_row(norm.ranges))

    for layer in network.layers:
        for row in layer.weights:
            lines.append(_row(row))
        for value in layer.bias:
            lines.append(_row([value]))

    return "\n".join(lines) + "\n"


def write_nnet(network: Network, path: Union[str, Path], comment: str = "generated network") -> Path:
    path = Path(path)
    path.write_text(dump_nnet(network, comment))
    return path
