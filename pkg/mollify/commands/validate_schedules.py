"""validate_schedules.py implements the validate-schedules command, which reports the convergence verdict."""

import math

from mollify.commands import EXIT_CONFIG_ERROR, EXIT_FAILED, EXIT_OK, BaseCommand
from mollify.core import Mode, RegularityProfile, SmootherKind, validate_schedules
from mollify.utils import MollifyError


class Command(BaseCommand):
    """Check step-size and smoothing schedules against the convergence conditions."""

    help = "Check beta_n = c_beta n^-iota and gamma_n = c_gamma n^-kappa against the convergence conditions."

    def add_arguments(self, parser):
        """Add the schedule exponents, constants and objective regularity."""
        parser.add_argument("--iota", type=float, required=True)
        parser.add_argument("--kappa", type=float, required=True)
        parser.add_argument("--alpha", type=float, required=True, help="Hölder exponent of the objective")
        parser.add_argument("--eta", type=float, default=math.inf, help="noise moment order (default inf)")
        parser.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.STOCHASTIC.value)
        parser.add_argument("--smoother", default=SmootherKind.EXP.value)
        parser.add_argument("--c-beta", type=float, default=1.0)
        parser.add_argument("--c-gamma", type=float, default=1.0)

    def handle(self, **options):
        """Print the verdict and every evaluated inequality."""
        mode = options.get("mode", Mode.STOCHASTIC.value)
        try:
            profile = RegularityProfile(
                alpha=options["alpha"],
                beta_upper=max(options["alpha"], 1.0),
                eta=options.get("eta", math.inf),
                deterministic=mode == Mode.DETERMINISTIC.value,
            )
            verdict = validate_schedules(
                options["iota"],
                options["kappa"],
                profile,
                mode,
                c_beta=options.get("c_beta", 1.0),
                c_gamma=options.get("c_gamma", 1.0),
                smoother=options.get("smoother", SmootherKind.EXP.value),
            )
        except MollifyError as e:
            return self.fail(e, EXIT_CONFIG_ERROR)

        self.write(verdict.level.label)
        for reason in verdict.reasons:
            self.write(f"  {reason}")
        if verdict.c_star_used is not None:
            self.write(f"  c_star = {verdict.c_star_used:g}")
        for note in verdict.notes:
            self.write(f"  note: {note}")
        return EXIT_OK if verdict.converges else EXIT_FAILED
