# ==================================================================================
# ParaTomo Experiment Runner v1.0.0
#
# Learns whole families of quantum states rho(x) from a few tomography
# experiments at randomly drawn parameter values, by compressed-sensing
# recovery of their expansion in a bounded orthonormal system.
#
# ==================================================================================

import os
import sys
import logging
import argparse

from paratomo.config import apply_overrides, load_config
from paratomo.errors import ConfigError
from paratomo.runner import COMMANDS, EXIT_VALIDATION, ParaTomo
from paratomo.utils import setup_logging

# --- Global Setup ---
SCRIPT_DIR = os.path.dirname(os.path.abspath(__file__))
SCRIPT_VERSION = "v1.0.0"


def build_parser():
    parser = argparse.ArgumentParser(
        description="ParaTomo: compressed-sensing tomography of parametrized quantum states.",
        formatter_class=argparse.RawTextHelpFormatter
    )
    subparsers = parser.add_subparsers(dest='command', required=True, metavar='COMMAND')
    helps = {
        'run-nmr': "Fourier recovery of a sub-Gaussian state under an integer-spectrum Hamiltonian.",
        'run-fermion': "Chebyshev recovery of a fermionic Gaussian evolution.",
        'support-id': "Identify an unknown Fourier support, then recover on it.",
        'recover': "Recover the configured family and write its coefficient sidecar.",
        'predict': "Evaluate observables on a grid from a stored coefficient sidecar.",
        'audit': "Run the numerical self-checks and record them in the ledger.",
    }
    for command in COMMANDS:
        sub = subparsers.add_parser(command, help=helps[command])
        sub.add_argument('--config', default=os.path.join(SCRIPT_DIR, "config.json"),
                         help="Path to the JSON configuration (default: config.json next to this script).")
        sub.add_argument('--seed', type=int, help="Override the configured seed (unsigned 64-bit).")
        sub.add_argument('--out', help="Override the report output directory.")
        sub.add_argument('--mode', choices=("theorem", "empirical"), help="Override recovery.mode.")
        sub.add_argument('--dry-run', action='store_true', help="Compute everything but write no reports or ledger rows.")
        sub.add_argument('--debug', action='store_true', help="Enable verbose debug logging.")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)

    # Define data paths
    data_dir = os.path.join(SCRIPT_DIR, "data")
    log_dir = os.path.join(data_dir, "logs")
    db_path = os.path.join(data_dir, "paratomo_ledger.db")
    os.makedirs(data_dir, exist_ok=True)

    # Initialize logging first
    setup_logging(log_dir, args.debug)

    logging.info("--- ParaTomo %s ---", SCRIPT_VERSION)

    try:
        config = load_config(args.config, COMMANDS[args.command])
        apply_overrides(config, seed=args.seed, out=args.out, mode=args.mode)
    except ConfigError as e:
        logging.critical("FATAL: %s", e)
        return EXIT_VALIDATION

    # Inject dynamic paths into config for the application class to use
    config['paths'] = {
        'db': db_path,
        'logs': log_dir,
        'output': config['output']['dir'],
    }

    try:
        # Instantiate and run the main application
        app = ParaTomo(args, config)
        return app.run()
    except Exception as e:
        logging.critical("An unhandled exception occurred: %s", e, exc_info=True)
        raise


if __name__ == "__main__":
    sys.exit(main())
