"""
Точка входа CLI: hsap <synth|project|sap|sweep|plot> [flags]
"""
import argparse
import sys
from typing import NoReturn, Optional, Sequence

from loguru import logger

from hsap import __version__
from hsap.commands import handlers
from hsap.core.exceptions import EXIT_USAGE, ConfigurationError
from hsap.middlewares import monitor_command
from hsap.schemas.clusters import AnchorStrategy, ClusterMode, DistanceMetric
from hsap.schemas.matrices import Interleave, MatrixFormat
from hsap.schemas.projection import InitStrategy
from hsap.settings import settings
from hsap.utils.const import SYNTH_PER_LINE, SYNTH_PLANE, SYNTH_RANGE


class HsapArgumentParser(argparse.ArgumentParser):
    """argparse с кодом выхода 1 для ошибок использования"""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        raise ConfigurationError(f"{self.prog}: {message}", code="usage")


def _choices(enum_type: type) -> list[str]:
    return [member.value for member in enum_type]


def _add_input_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="Матрица данных (.csv или бинарный формат HSAP) или сырой куб")
    parser.add_argument("--cube", help="Размеры сырого куба HxWxB")
    parser.add_argument("--interleave", choices=_choices(Interleave), default=Interleave.BIP.value)
    parser.add_argument("--config", help="Файл параметров key = value")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--init", choices=_choices(InitStrategy))
    parser.add_argument("--init-center", action="store_const", const=True, help="Центрировать данные для PCA-инициализации")
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--iters", type=int)
    parser.add_argument("--cap", type=int, help="Предел материализации секущих")
    parser.add_argument("--verbose", action="store_true")


def _add_hsap_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--clusters", type=int, help="Число кластеров N")
    parser.add_argument("--labels", help="CSV меток кластеров (k-means пропускается)")
    parser.add_argument("--mode", choices=_choices(ClusterMode))
    parser.add_argument("--anchors", type=int, help="|A_j|")
    parser.add_argument("--anchor-strategy", choices=_choices(AnchorStrategy))
    parser.add_argument("--energy", type=float)
    parser.add_argument("--cluster-dim", type=int)
    parser.add_argument("--within-samples", type=int)
    parser.add_argument("--metric", choices=_choices(DistanceMetric))
    parser.add_argument("--stop-tol", type=float)
    parser.add_argument("--stop-window", type=int)
    parser.add_argument("--kmeans-iters", type=int)
    parser.add_argument("--full-svd", action="store_const", const=True)
    parser.add_argument("--resample-within", action="store_const", const=True)
    parser.add_argument("--threads", type=int)


def _add_output_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--format", choices=_choices(MatrixFormat), default=MatrixFormat.CSV.value)
    parser.add_argument("--save-secants", action="store_true", help="Сохранить S~ (бинарная матрица + provenance)")


def create_parser() -> HsapArgumentParser:
    """Создает и настраивает парсер аргументов"""
    parser = HsapArgumentParser(prog="hsap", description="Hierarchical secant-avoidance projection")
    parser.add_argument("--version", action="version", version=f"hsap {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", help="Синтетический набор: две прямые и плоскость в R^3")
    synth.add_argument("--per-line", type=int, default=SYNTH_PER_LINE)
    synth.add_argument("--plane", type=int, default=SYNTH_PLANE)
    synth.add_argument("--range", default=f"{SYNTH_RANGE[0]},{SYNTH_RANGE[1]}", help="Интервал параметров low,high (например --range=-5,5)")
    synth.add_argument("--seed", type=int)
    synth.add_argument("--out", required=True)
    synth.add_argument("--labels-out")
    synth.add_argument("--verbose", action="store_true")
    synth.set_defaults(handler=handlers.cmd_synth, parser=synth)

    project = commands.add_parser("project", help="Запуск HSAP")
    _add_input_arguments(project)
    project.add_argument("--dim", type=int, help="Размерность проекции k")
    _add_hsap_arguments(project)
    _add_output_arguments(project)
    project.set_defaults(handler=handlers.cmd_project, parser=project)

    sap = commands.add_parser("sap", help="SAP на полном множестве секущих")
    _add_input_arguments(sap)
    sap.add_argument("--dim", type=int, help="Размерность проекции k")
    _add_output_arguments(sap)
    sap.set_defaults(handler=handlers.cmd_sap, parser=sap)

    sweep = commands.add_parser("sweep", help="Профиль размерности")
    _add_input_arguments(sweep)
    sweep.add_argument("--kmin", type=int, required=True)
    sweep.add_argument("--kmax", type=int, required=True)
    sweep.add_argument("--threshold", type=float, default=0.5)
    sweep.add_argument("--plot", action="store_true", help="Дополнительно profile.svg")
    sweep.add_argument("--out-dir", required=True)
    _add_hsap_arguments(sweep)
    sweep.set_defaults(handler=handlers.cmd_sweep, parser=sweep)

    plot = commands.add_parser("plot", help="SVG-графики")
    plot.add_argument("--trace", help="CSV трассы")
    plot.add_argument("--points", help="Матрица точек с 2 или 3 столбцами")
    plot.add_argument("--labels", help="CSV меток для цвета точек")
    plot.add_argument("--profile", help="CSV профиля размерности")
    plot.add_argument("--label-map", help="CSV меток пикселей куба")
    plot.add_argument("--shape", help="HxW для --label-map")
    plot.add_argument("--out", required=True)
    plot.add_argument("--verbose", action="store_true")
    plot.set_defaults(handler=handlers.cmd_plot, parser=plot)
    return parser


def setup_logging(verbose: bool = False) -> None:
    """Один sink в stderr; уровень из настроек или DEBUG при --verbose"""
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if verbose else settings.log_level.upper())


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigurationError as e:
        print(e.message, file=sys.stderr)
        return EXIT_USAGE

    setup_logging(args.verbose)
    exit_code = monitor_command(args.command, lambda: args.handler(args))
    if exit_code == EXIT_USAGE:
        args.parser.print_usage(sys.stderr)
    return exit_code


if __name__ == "__main__":
    raise SystemExit(main())
