"""Read-cost model: full and progressive retrieval cost, per-layer
nucleotide counts, and the progressive-decoding gain, over theoretical
inputs or simulator telemetry.

Cost is expressed in sequenced nucleotides per input pixel.  The
theoretical variant charges coverage x oligo-count per layer; the
simulated variant replays session event logs, so ejection overhead
(a fixed decision-latency charge per rejected strand) is included.

Sum conventions: layers run 0..n_levels-1 inclusive and the progressive
cost for prefix K sums layers 0..K inclusive.
"""

import csv
import io
from dataclasses import dataclass, field

from .exceptions import DnapixError, NotFound

# Published per-layer oligo counts used as a reporting fixture; the matching
# coverage profile is unknown, so these are reference points, not targets.
REFERENCE_OLIGO_COUNTS = {0: 802, 1: 2229, 2: 6208}
REFERENCE_GAINS = {0: 7.74, 1: 5.71, 2: 3.30}


@dataclass
class CostInputs:
    """Per-(image, layer) oligo counts and coverage, plus pixel totals.

    coverage is expected sequenced nucleotides per molecule
    (reads per molecule x molecule length).
    """

    n_levels: int
    pixels: dict = field(default_factory=dict)  # image_id -> pixel count
    number_oligos: dict = field(default_factory=dict)  # (image_id, k) -> count
    coverage: dict = field(default_factory=dict)  # (image_id, k) -> nt/molecule

    def __post_init__(self):
        if self.n_levels < 1:
            raise DnapixError("n_levels must be >= 1")
        for img, px in self.pixels.items():
            if px <= 0:
                raise DnapixError(f"pixels for {img} must be > 0")
            for k in range(self.n_levels):
                if (img, k) not in self.number_oligos:
                    raise DnapixError(f"missing number_oligos for {img} layer {k}")
                if (img, k) not in self.coverage:
                    raise DnapixError(f"missing coverage for {img} layer {k}")
        for key, n in self.number_oligos.items():
            if n <= 0:
                raise DnapixError(f"number_oligos{key} must be > 0")
        for key, c in self.coverage.items():
            if c <= 0:
                raise DnapixError(f"coverage{key} must be > 0")

    @property
    def n_images(self):
        return len(self.pixels)

    @property
    def image_ids(self):
        return sorted(self.pixels)

    @property
    def total_pixels(self):
        return sum(self.pixels.values())

    def coverage_reads(self, image_id, k, molecule_nt):
        """Alternate reads-per-oligo view of the coverage figure."""
        if molecule_nt <= 0:
            raise DnapixError("molecule_nt must be > 0")
        return self.coverage[(image_id, k)] / molecule_nt

    @classmethod
    def single_image(cls, image_id, pixels, oligos_per_layer, coverage_per_layer):
        """Build inputs for one image from per-layer sequences."""
        n = len(oligos_per_layer)
        if len(coverage_per_layer) != n:
            raise DnapixError("oligos and coverage must have equal length")
        return cls(
            n_levels=n,
            pixels={image_id: pixels},
            number_oligos={(image_id, k): oligos_per_layer[k] for k in range(n)},
            coverage={(image_id, k): coverage_per_layer[k] for k in range(n)},
        )


@dataclass(frozen=True)
class CostReport:
    variant: str  # "theoretical" | "simulated"
    n_levels: int
    r_c: float
    r_c_pd: tuple  # per prefix K
    g_pd: tuple  # per prefix K
    avg_g_pd: tuple  # per-image gains averaged over images
    oligos_per_layer: tuple  # summed over images
    nucs_per_layer: tuple  # summed over images


# ---------------------------------------------------------------------------
# theoretical model


def _check_layer(inputs, k):
    if not 0 <= k < inputs.n_levels:
        raise DnapixError(f"layer {k} out of range 0..{inputs.n_levels - 1}")


def nucs(inputs, image_id, k):
    """Nucleotides to sequence for one (image, layer): coverage x oligos."""
    _check_layer(inputs, k)
    if image_id not in inputs.pixels:
        raise NotFound(f"unknown image {image_id!r}")
    return inputs.coverage[(image_id, k)] * inputs.number_oligos[(image_id, k)]


def layer_nucs(inputs, k):
    return sum(nucs(inputs, img, k) for img in inputs.image_ids)


def read_cost_pd(inputs, K):
    """Progressive read cost (nt/pixel) of retrieving layers 0..K."""
    _check_layer(inputs, K)
    total = sum(layer_nucs(inputs, k) for k in range(K + 1))
    return total / inputs.total_pixels


def read_cost_full(inputs):
    """Full-retrieval read cost: all layers of all images, nt/pixel."""
    return read_cost_pd(inputs, inputs.n_levels - 1)


def gain(inputs, K):
    """Progressive-decoding gain: full cost over prefix-K cost."""
    return read_cost_full(inputs) / read_cost_pd(inputs, K)


def image_gain(inputs, image_id, K):
    """Gain restricted to one image's own layers and pixels."""
    _check_layer(inputs, K)
    full = sum(nucs(inputs, image_id, k) for k in range(inputs.n_levels))
    part = sum(nucs(inputs, image_id, k) for k in range(K + 1))
    return full / part


def average_gain(inputs, K):
    """Per-image gains averaged over images."""
    return sum(image_gain(inputs, img, K) for img in inputs.image_ids) / (
        inputs.n_images
    )


def theoretical_report(inputs):
    ks = range(inputs.n_levels)
    r_c = read_cost_full(inputs)
    r_c_pd = tuple(read_cost_pd(inputs, K) for K in ks)
    return CostReport(
        variant="theoretical",
        n_levels=inputs.n_levels,
        r_c=r_c,
        r_c_pd=r_c_pd,
        g_pd=tuple(r_c / v for v in r_c_pd),
        avg_g_pd=tuple(average_gain(inputs, K) for K in ks),
        oligos_per_layer=tuple(
            sum(inputs.number_oligos[(img, k)] for img in inputs.image_ids)
            for k in ks
        ),
        nucs_per_layer=tuple(layer_nucs(inputs, k) for k in ks),
    )


# ---------------------------------------------------------------------------
# simulated variant (telemetry replay)


def _layer_of(ref_id):
    _, _, layer = ref_id.rpartition("/")
    try:
        return int(layer)
    except ValueError:
        raise DnapixError(f"cannot parse layer from target {ref_id!r}") from None


def simulated_cost(telemetries, inputs):
    """CostReport from session event logs; ejection overhead included.

    ``telemetries`` is an iterable of SessionTelemetry whose events, pooled
    together, must cover every layer 0..n_levels-1.
    """
    per_layer_nt = {k: 0 for k in range(inputs.n_levels)}
    seen = set()
    for t in telemetries:
        for ev in t.events:
            k = _layer_of(ev.target_ref_id)
            if k not in per_layer_nt:
                raise DnapixError(f"telemetry targets layer {k} outside inputs")
            per_layer_nt[k] += ev.sequenced_nt
            seen.add(k)
    missing = sorted(set(per_layer_nt) - seen)
    if missing:
        raise DnapixError(f"telemetry missing for layers {missing}")
    px = inputs.total_pixels
    cum = 0
    r_c_pd = []
    for k in range(inputs.n_levels):
        cum += per_layer_nt[k]
        r_c_pd.append(cum / px)
    r_c = r_c_pd[-1]
    g_pd = tuple(r_c / v for v in r_c_pd)
    ks = range(inputs.n_levels)
    return CostReport(
        variant="simulated",
        n_levels=inputs.n_levels,
        r_c=r_c,
        r_c_pd=tuple(r_c_pd),
        g_pd=g_pd,
        avg_g_pd=g_pd,  # telemetry is pooled; no per-image split
        oligos_per_layer=tuple(
            sum(inputs.number_oligos[(img, k)] for img in inputs.image_ids)
            for k in ks
        ),
        nucs_per_layer=tuple(per_layer_nt[k] for k in ks),
    )


# ---------------------------------------------------------------------------
# rendering


def render_table(report):
    """Fixed-width per-layer table: oligo counts, costs, and gains."""
    header = f"{'layer':<7}{'oligos':>9}{'nucs':>16}{'Rc_pd':>14}{'Gpd':>8}"
    lines = [f"read-cost report ({report.variant})", header, "-" * len(header)]
    for k in range(report.n_levels):
        lines.append(
            f"{'L' + str(k):<7}"
            f"{report.oligos_per_layer[k]:>9}"
            f"{report.nucs_per_layer[k]:>16.0f}"
            f"{report.r_c_pd[k]:>14.3f}"
            f"{report.g_pd[k]:>8.2f}"
        )
    lines.append("-" * len(header))
    lines.append(f"{'R_c':<7}{'':>9}{'':>16}{report.r_c:>14.3f}{1.0:>8.2f}")
    return "\n".join(lines)


def write_csv(report, path_or_file):
    """CSV export: one row per layer prefix K."""
    if hasattr(path_or_file, "write"):
        _write_csv(report, path_or_file)
    else:
        with open(path_or_file, "w", encoding="utf-8", newline="") as fh:
            _write_csv(report, fh)


def _write_csv(report, fh):
    w = csv.writer(fh)
    w.writerow(["layer", "K", "oligos", "nucs", "Rc_pd", "Gpd"])
    for k in range(report.n_levels):
        w.writerow(
            [
                f"L{k}",
                k,
                report.oligos_per_layer[k],
                f"{report.nucs_per_layer[k]:.0f}",
                f"{report.r_c_pd[k]:.6f}",
                f"{report.g_pd[k]:.6f}",
            ]
        )


def render_csv(report):
    buf = io.StringIO()
    _write_csv(report, buf)
    return buf.getvalue()


def reference_fixture(pixels=512 * 768, coverage_nt=1216.0):
    """Published per-layer oligo counts wrapped as CostInputs for reporting."""
    n = len(REFERENCE_OLIGO_COUNTS)
    return CostInputs.single_image(
        "reference",
        pixels,
        [REFERENCE_OLIGO_COUNTS[k] for k in range(n)],
        [coverage_nt] * n,
    )
