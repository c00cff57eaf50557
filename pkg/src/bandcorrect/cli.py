"""Command-line driver for the full sinc-pulse correction experiment.

Every command reads one JSON run configuration (``--config``; defaults
otherwise), applies ``--set section.field=value`` overrides and writes
plot-ready CSV/JSON files into ``--out``.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import timeit
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import ann, correction, spectral
from .acquisition import NoiseConfig, simulate_acquisition
from .essc import ConditioningConfig, condition, essc, fingerprint
from .spectral import FilterBank
from .waveform import Signal, sinc_pulse, write_csv


@dataclass(frozen=True)
class SincConfig:
    num_samples: int = 10000
    center: float = 0.5
    bandwidth: float = 3.75


@dataclass(frozen=True)
class RunConfig:
    nu_max: float = 7.5
    n_bands_max: int = 4
    sinc: SincConfig = field(default_factory=SincConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    conditioning: ConditioningConfig = field(default_factory=ConditioningConfig)
    train: ann.TrainConfig = field(default_factory=ann.TrainConfig)
    attenuation_levels: tuple = correction.ATTENUATION_LEVELS
    samples_per_class: int = 1000
    confusion_runs: int = 50
    hidden_sizes: tuple = ann.DEFAULT_HIDDEN_SIZES
    seed: int = 2022

    def __post_init__(self):
        if self.n_bands_max < 1:
            raise ValueError("n_bands_max must be >= 1")
        lv = tuple(float(a) for a in self.attenuation_levels)
        if list(lv) != sorted(lv, reverse=True) or lv[-1] != 0.0:
            raise ValueError(f"attenuation_levels must be sorted descending and end at 0, got {lv}")
        object.__setattr__(self, "attenuation_levels", lv)
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))

    @property
    def bank(self) -> FilterBank:
        return FilterBank(self.nu_max, self.n_bands_max)

    def original(self) -> Signal:
        return sinc_pulse(self.sinc.num_samples, self.sinc.center, self.sinc.bandwidth)

    def dataset_seed(self, split):
        return self.seed + (0 if split == "train" else 1)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        nested = {"sinc": SincConfig, "noise": NoiseConfig, "conditioning": ConditioningConfig,
                  "train": ann.TrainConfig}
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key, typ in nested.items():
            if key in d:
                d[key] = typ(**d[key])
        for key in ("attenuation_levels", "hidden_sizes"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))


def _coerce(old, text):
    if isinstance(old, bool):
        return text.lower() in ("1", "true", "yes")
    if isinstance(old, int):
        return int(text)
    if isinstance(old, float):
        return float(text)
    if isinstance(old, tuple):
        return tuple(type(old[0])(v) if old else float(v) for v in text.split(","))
    return text


def apply_overrides(config: RunConfig, assignments) -> RunConfig:
    """Apply ``section.field=value`` (or ``field=value``) strings."""
    for item in assignments or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"override {item!r} is not of the form key=value")
        parts = key.strip().split(".")
        if len(parts) == 1:
            if not hasattr(config, parts[0]):
                raise ValueError(f"unknown config field {parts[0]!r}")
            config = replace(config, **{parts[0]: _coerce(getattr(config, parts[0]), value)})
        elif len(parts) == 2:
            section = getattr(config, parts[0], None)
            if section is None or not hasattr(section, parts[1]):
                raise ValueError(f"unknown config field {key!r}")
            new = replace(section, **{parts[1]: _coerce(getattr(section, parts[1]), value)})
            config = replace(config, **{parts[0]: new})
        else:
            raise ValueError(f"override key {key!r} nests too deeply")
    return config


def load_config(args) -> RunConfig:
    config = RunConfig.loads(Path(args.config).read_text()) if args.config else RunConfig()
    config = apply_overrides(config, args.set)
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    return config


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _say(msg):
    print(msg, flush=True)


def cmd_config(args):
    config = load_config(args)
    if args.write:
        Path(args.write).write_text(config.dumps())
        _say(f"wrote {args.write}")
    else:
        _say(config.dumps())


def cmd_synth(args):
    config, out = load_config(args), _out(args)
    f = config.original()
    write_csv(f, out / "waveform.csv")
    spectral.write_spectrum_csv(spectral.dft(f), out / "spectrum.csv")
    _say(f"wrote {out / 'waveform.csv'} and {out / 'spectrum.csv'}")


def cmd_decompose(args):
    config, out = load_config(args), _out(args)
    f, bank = config.original(), config.bank
    nu = spectral.frequency_grid(f)
    wavelets = spectral.decompose(f, bank)
    profiles = spectral.filter_bank_profiles(bank, nu)
    for n, (g, prof) in enumerate(zip(wavelets, profiles)):
        write_csv(g, out / f"wavelet_band{n}.csv")
        write_csv(f.with_samples(f.samples - g.samples), out / f"extracted_band{n}.csv")
        spectral.write_profile_csv(nu, prof, out / f"filter_band{n}.csv")
    total = f.with_samples(np.sum([g.samples for g in wavelets], axis=0))
    write_csv(total, out / "wavelet_sum.csv")
    spectral.write_profile_csv(nu, profiles.sum(axis=0), out / "filter_sum.csv")
    _say(f"wrote {bank.n_bands} bands to {out}")


def cmd_dataset(args):
    config, out = load_config(args), _out(args)
    t0 = time.perf_counter()
    ds = correction.build_training_dataset(
        config.original(), config.bank, args.band, config.samples_per_class, config.noise,
        config.dataset_seed(args.split), config.conditioning, config.attenuation_levels)
    path = out / f"dataset_band{args.band}_{args.split}.csv"
    ds.write_csv(path)
    _say(f"wrote {path} ({len(ds)} rows, {time.perf_counter() - t0:.1f} s)")


def cmd_train(args):
    config, out = load_config(args), _out(args)
    path = Path(args.dataset) if args.dataset else out / f"dataset_band{args.band}_train.csv"
    ds = correction.Dataset.read_csv(path)
    best, losses, models = ann.select_hidden_size(ds.features, ds.labels, config.hidden_sizes, config.train,
                                                  band_index=args.band)
    model = models[best]
    model_path = out / f"model_band{args.band}.json"
    model.save(model_path)
    with (out / f"sweep_band{args.band}.csv").open("w") as fh:
        fh.write("hidden_size,validation_cross_entropy,selected\n")
        for h, loss in losses.items():
            fh.write(f"{h},{loss!r},{int(h == best)}\n")
    _say(f"band {args.band}: hidden size {best} (validation cross-entropy {losses[best]:.4f}); wrote {model_path}")


def cmd_eval(args):
    config, out = load_config(args), _out(args)
    model = ann.BandClassifier.load(args.model or out / f"model_band{args.band}.json")
    ds = correction.Dataset.read_csv(args.dataset or out / f"dataset_band{args.band}_test.csv")
    cm = ann.averaged_confusion_matrix(model, ds.features, ds.labels, config.confusion_runs,
                                       np.random.default_rng([config.seed, args.band, 77]))
    path = out / f"confusion_band{args.band}.csv"
    cm.write_csv(path)
    _say(f"wrote {path}")
    _say(np.array2string(cm.counts, precision=1, suppress_small=True))


def _parse_factors(text, n_bands):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ValueError(f"cannot parse system factors {text!r}") from None
    if len(vals) != n_bands:
        raise ValueError(f"expected {n_bands} system factors, got {len(vals)}")
    return np.array(vals)


def cmd_correct(args):
    config, out = load_config(args), _out(args)
    bank, f = config.bank, config.original()
    factors = _parse_factors(args.system_factors, bank.n_bands)
    models_dir = Path(args.models_dir) if args.models_dir else out
    models = [ann.BandClassifier.load(models_dir / f"model_band{n}.json") for n in range(bank.n_bands)]
    res = correction.end_to_end_eval(factors, models, bank, f, config.noise,
                                     np.random.default_rng([config.seed, 99]), config.conditioning, args.repeats)

    nu = spectral.frequency_grid(f)
    files = {
        "original": f,
        "system_output": res.system_output,
        "corrected": res.correction.corrected,
        "corrected_output": res.output,
    }
    written = {}
    for name, sig in files.items():
        write_csv(sig, out / f"{name}.csv")
        spectral.write_spectrum_csv(spectral.dft(sig), out / f"{name}_spectrum.csv")
        written[name] = str(out / f"{name}.csv")
        written[name + "_spectrum"] = str(out / f"{name}_spectrum.csv")
    for i, acq in enumerate(res.acquired):
        write_csv(acq, out / f"acquired_{i}.csv")
    spectral.write_profile_csv(nu, spectral.system_response_profile(bank, factors, nu), out / "system_response.csv")
    spectral.write_profile_csv(nu, correction.compensation_profile(bank, res.correction.factors, nu),
                               out / "compensation.csv")
    written["system_response"] = str(out / "system_response.csv")
    written["compensation"] = str(out / "compensation.csv")

    report = {
        "system_factors": factors.tolist(),
        "correction_factors": res.correction.factors.tolist(),
        "probabilities": {f"band{n}": dict(zip(ann.CLASS_LABELS, p.tolist()))
                          for n, p in enumerate(res.correction.probabilities)},
        "factors_capped": res.correction.capped,
        "e_rms_percent": res.e_rms_percent,
        "repeats": args.repeats,
        "files": written,
    }
    (out / "correction_report.json").write_text(json.dumps(report, indent=2))
    _say("correction factors: " + ", ".join(f"{v:.4f}" for v in res.correction.factors))
    _say(f"e_RMS% = {res.e_rms_percent:.3f}")


def time_call(fn, repeats):
    """Best per-call time over ``repeats`` batches, each batch lasting at least 0.2 s."""
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeats, number=number)) / number


BENCH_STAGES = ("fingerprint", "essc", "fft")


def run_benchmark(sizes=(1000, 10000, 100000), repeats=7, seed=0, conditioning=ConditioningConfig(),
                  stages=BENCH_STAGES):
    """Best-of-``repeats`` timings at N and 2N conditioned samples for each size.

    ``fingerprint`` times feature extraction on an already conditioned record
    of exactly N samples; ``essc`` adds conditioning of the raw record it came
    from; ``fft`` is the fast transform of the same N samples, for scale.
    """
    rows = []
    for n in sizes:
        entry = {"n": n}
        for label, m in (("n", n), ("2n", 2 * n)):
            # the conditioning crop keeps pulse_window_fraction of the raw record
            n_raw = int(np.ceil(m / conditioning.pulse_window_fraction))
            ideal = sinc_pulse(n_raw * 10)
            raw = simulate_acquisition(ideal, NoiseConfig(seed=seed), np.random.default_rng(seed))
            conditioned = condition(raw, conditioning)
            conditioned = conditioned.with_samples(conditioned.samples[:m]) if len(conditioned) > m else conditioned
            thr = conditioning.ssc_threshold_fraction
            fingerprint(conditioned, thr)  # compile outside the timed region
            entry[f"samples_{label}"] = len(conditioned)
            calls = {
                "fingerprint": lambda: fingerprint(conditioned, thr),
                "essc": lambda: essc(raw, conditioning),
                "fft": lambda: np.fft.fft(conditioned.samples),
            }
            for stage in stages:
                entry[f"{stage}_{label}"] = time_call(calls[stage], repeats)
        for stage in stages:
            entry[f"{stage}_doubling_ratio"] = entry[f"{stage}_2n"] / entry[f"{stage}_n"]
        rows.append(entry)
    return rows


def cmd_bench(args):
    config, out = load_config(args), _out(args)
    rows = run_benchmark(repeats=args.repeats, seed=config.seed, conditioning=config.conditioning)
    (out / "bench.json").write_text(json.dumps(rows, indent=2))
    _say(f"{'N':>8} {'FP(N) ms':>9} {'FP 2N/N':>8} {'ESSC(N) ms':>11} {'ESSC 2N/N':>10} {'FFT 2N/N':>9}")
    for r in rows:
        _say(f"{r['n']:>8} {1e3 * r['fingerprint_n']:>9.3f} {r['fingerprint_doubling_ratio']:>8.2f} "
             f"{1e3 * r['essc_n']:>11.3f} {r['essc_doubling_ratio']:>10.2f} {r['fft_doubling_ratio']:>9.2f}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", default="run", help="output directory (default: run)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config field, e.g. noise.gaussian_sigma_fraction=0")
    common.add_argument("--seed", type=int, help="override the base seed")

    p = argparse.ArgumentParser(prog="bandcorrect", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("config", parents=[common], help="print or write the effective configuration")
    s.add_argument("--write", help="write the configuration to this path")
    s.set_defaults(func=cmd_config)

    sub.add_parser("synth", parents=[common], help="ideal pulse and its spectrum").set_defaults(func=cmd_synth)
    sub.add_parser("decompose", parents=[common], help="band wavelets and filter profiles").set_defaults(
        func=cmd_decompose)

    s = sub.add_parser("dataset", parents=[common], help="labelled fingerprint dataset for one band")
    s.add_argument("--band", type=int, required=True)
    s.add_argument("--split", choices=("train", "test"), default="train")
    s.set_defaults(func=cmd_dataset)

    s = sub.add_parser("train", parents=[common], help="hidden-size sweep and final classifier for one band")
    s.add_argument("--band", type=int, required=True)
    s.add_argument("--dataset", help="training CSV (default: OUT/dataset_bandN_train.csv)")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", parents=[common], help="averaged confusion matrix for one band")
    s.add_argument("--band", type=int, required=True)
    s.add_argument("--model", help="model file (default: OUT/model_bandN.json)")
    s.add_argument("--dataset", help="test CSV (default: OUT/dataset_bandN_test.csv)")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("correct", parents=[common], help="end-to-end correction of a simulated system")
    s.add_argument("--system-factors", required=True, help="comma-separated attenuation per band")
    s.add_argument("--models-dir", help="directory holding model_bandN.json (default: OUT)")
    s.add_argument("--repeats", type=int, default=1, help="acquisitions averaged per correction")
    s.set_defaults(func=cmd_correct)

    s = sub.add_parser("bench", parents=[common], help="ESSC vs FFT timing at growing record lengths")
    s.add_argument("--repeats", type=int, default=7)
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ValueError, IndexError, OSError, ann.TrainingDivergedError, json.JSONDecodeError) as exc:
        print(f"bandcorrect {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
