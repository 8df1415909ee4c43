"""
Command-line entry point: ``gui-migrate <analyze|migrate|bench|verify|replay> ...``.

Exit status is 0 on success, 1 when the task fails and 2 for usage errors.
"""

import argparse
import json
from logging.config import dictConfig
import os
import sys
from typing import List, Optional

from guimigrate.analyzer import build_skeleton, save_skeleton
from guimigrate.codec import load_test_case, save_test_case
from guimigrate.config import GATEWAY_REMOTE, GATEWAY_SCRIPTED, DEVICE_LIVE, DEVICE_SIMULATED, MigrationConfig, Toggles
from guimigrate.device import SimulatedDevice, load_visual_log, record_visual_log, replay_test, save_visual_log
from guimigrate.gateway import VlmGateway
from guimigrate.harness import MigrationTask, render_report_table, run_benchmark, save_report, verify_result
from guimigrate.integrations import Devices, Gateways
from guimigrate.interfaces import Device, VlmBackend
from guimigrate.migrator import load_result, migrate, save_result, traced_skeleton
from guimigrate.model import MigrationStatus
from guimigrate.trace import TraceRecorder, clock_for_seed
from guimigrate.util import MigrationError, log
from guimigrate.version import VERSION

EXIT_OK = 0
EXIT_TASK_FAILED = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def configure_logging(verbose: bool):
    dictConfig({
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': {
            'default': {
                'format': '[%(asctime)s] [%(name)s] %(levelname)s: %(message)s',
            }
        },
        'handlers': {
            'console': {
                'class': 'logging.StreamHandler',
                'formatter': 'default',
                'stream': 'ext://sys.stderr'
            }
        },
        'root': {
            'level': 'DEBUG' if verbose else 'INFO',
            'handlers': ['console']
        },
        'loggers': {
            'urllib3': {'level': 'WARNING'}
        }
    })


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON or YAML configuration file')
    common.add_argument('--gateway', help="'scripted:<transcript>' or 'remote' (uses VLM_ENDPOINT and VLM_API_KEY)")
    common.add_argument('--device', help="'sim:<model.json>' or 'live[:<bridge uri>]'")
    common.add_argument('--app-id', help='app id launched on reset of a live device')
    common.add_argument('--no-vision', action='store_true', help='send no screenshots to the VLM')
    common.add_argument('--no-analyzer', action='store_true', help='use one key step per source action')
    common.add_argument('--no-feedback', action='store_true', help='accept every executed action')
    common.add_argument('--seed', type=int, help='seed for a reproducible run')
    common.add_argument('--out', help='output directory')
    common.add_argument('--verbose', '-v', action='store_true', help='enable debug logging')
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog='gui-migrate', description='Migrate GUI tests between similar apps.')
    parser.add_argument('--version', action='version', version='%(prog)s ' + VERSION)
    sub = parser.add_subparsers(dest='command', required=True)

    analyze = sub.add_parser('analyze', parents=[common], help='emit the test skeleton of a source test')
    analyze.add_argument('source_test')
    analyze.add_argument('log_dir', nargs='?', help='visual execution log directory')
    analyze.add_argument('--source-model', help='record the log by replaying on this source app model')

    mig = sub.add_parser('migrate', parents=[common], help='migrate one source test to the target device')
    mig.add_argument('source_test')
    mig.add_argument('log_dir', nargs='?', help='visual execution log directory')
    mig.add_argument('--source-model', help='record the log by replaying on this source app model')

    bench = sub.add_parser('bench', parents=[common], help='run a dataset and report success rates')
    bench.add_argument('dataset_dir')
    bench.add_argument('--jobs', type=int, help='tasks run at once')
    bench.add_argument('--repeat', type=int, help='runs per task')
    bench.add_argument('--ablation', action='store_true', help='also run each single-toggle variant')

    verify = sub.add_parser('verify', parents=[common], help='label an existing migration result')
    verify.add_argument('result')
    verify.add_argument('--ground-truth', required=True, help='ground-truth test case of the target app')

    replay = sub.add_parser('replay', parents=[common], help='execute a test-case file on a device')
    replay.add_argument('test')
    return parser


def load_config(args: argparse.Namespace) -> MigrationConfig:
    cfg = MigrationConfig.from_file(args.config) if args.config else MigrationConfig.default()
    changes = {}
    base = cfg.toggles
    if args.no_vision or args.no_analyzer or args.no_feedback:
        changes['toggles'] = Toggles(no_vision=base.no_vision or args.no_vision,
                                     no_analyzer=base.no_analyzer or args.no_analyzer,
                                     no_feedback=base.no_feedback or args.no_feedback)
    if args.seed is not None:
        changes['seed'] = args.seed
    if args.gateway:
        changes['gateway'] = GATEWAY_REMOTE if args.gateway == GATEWAY_REMOTE else GATEWAY_SCRIPTED
    if args.device:
        changes['device'] = DEVICE_LIVE if args.device.startswith(DEVICE_LIVE) else DEVICE_SIMULATED
    for name in ('jobs', 'repeat'):
        if getattr(args, name, None) is not None:
            changes[name] = getattr(args, name)
    return cfg.copy_with(**changes) if changes else cfg


def open_device(spec: Optional[str], cfg: MigrationConfig, app_id: Optional[str]) -> Device:
    if not spec:
        raise UsageError('--device is required')
    if spec.startswith('sim:'):
        return Devices.simulated(spec[len('sim:'):], app_id or '')
    if spec == DEVICE_LIVE or spec.startswith(DEVICE_LIVE + ':'):
        if not app_id:
            raise UsageError('a live device needs --app-id')
        uri = spec[len(DEVICE_LIVE) + 1:] or None
        return Devices.live(app_id, uri, cfg.http)
    raise UsageError("--device must be 'sim:<model.json>' or 'live[:<uri>]', got %r" % spec)


def open_backend(spec: Optional[str], cfg: MigrationConfig) -> VlmBackend:
    if spec == GATEWAY_REMOTE:
        return Gateways.remote(cfg)
    if spec and spec.startswith('scripted:'):
        return Gateways.scripted(spec[len('scripted:'):])
    raise UsageError("--gateway must be 'scripted:<transcript>' or 'remote'")


def _source_log(args: argparse.Namespace, source):
    if args.log_dir:
        return load_visual_log(args.log_dir)
    if args.source_model:
        vlog = record_visual_log(Devices.simulated(args.source_model, source.app_id), source)
        if args.out:
            save_visual_log(vlog, os.path.join(args.out, 'source_log'))
        return vlog
    raise UsageError('give a visual execution log directory or --source-model')


def _read(path: str) -> bytes:
    with open(path, 'rb') as f:
        return f.read()


def _write(out: str, name: str, content: bytes):
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, name), 'wb') as f:
        f.write(content)


def cmd_analyze(args, cfg: MigrationConfig) -> int:
    source = load_test_case(_read(args.source_test))
    vlog = _source_log(args, source)
    gateway = VlmGateway(open_backend(args.gateway, cfg), cfg.requery_budget, cfg.toggles.no_vision)
    skeleton = save_skeleton(build_skeleton(source, vlog, gateway, cfg.toggles))
    if args.out:
        _write(args.out, 'skeleton.json', skeleton)
    else:
        sys.stdout.write(skeleton.decode('utf-8'))
    return EXIT_OK


def cmd_migrate(args, cfg: MigrationConfig) -> int:
    source = load_test_case(_read(args.source_test))
    vlog = _source_log(args, source)
    target = open_device(args.device, cfg, args.app_id)
    backend = open_backend(args.gateway, cfg)
    trace = TraceRecorder(clock_for_seed(cfg.seed))
    result = migrate(source, vlog, target, cfg, backend, trace)
    out = args.out or '.'
    _write(out, 'result.json', save_result(result))
    _write(out, 'generated_test.json', save_test_case(result.generated))
    trace.write(os.path.join(out, 'trace.jsonl'))
    skeleton = traced_skeleton(trace)
    if skeleton is not None:
        _write(out, 'skeleton.json', skeleton)
    print('%s: %d events generated' % (result.status, len(result.generated.events)))
    if result.error:
        print(result.error)
    return EXIT_OK if result.status == MigrationStatus.COMPLETED else EXIT_TASK_FAILED


def cmd_bench(args, cfg: MigrationConfig) -> int:
    gateway = args.gateway or (GATEWAY_REMOTE if cfg.gateway == GATEWAY_REMOTE else None)
    out = args.out or 'bench-out'
    report = run_benchmark(args.dataset_dir, cfg, gateway, args.ablation, out)
    save_report(report, out)
    sys.stdout.write(render_report_table(report))
    return EXIT_OK


def cmd_verify(args, cfg: MigrationConfig) -> int:
    result = load_result(_read(args.result))
    device = open_device(args.device, cfg, args.app_id)
    if not isinstance(device, SimulatedDevice):
        raise UsageError('verify replays on a simulated target; pass --device sim:<model.json>')
    ground_truth = load_test_case(_read(args.ground_truth))
    task = MigrationTask(os.path.basename(args.result), ground_truth.category, None, None, device.model, ground_truth)
    label = verify_result(result, task)
    print(json.dumps(label._asdict(), sort_keys=True))
    return EXIT_OK if label.is_success else EXIT_TASK_FAILED


def cmd_replay(args, cfg: MigrationConfig) -> int:
    tc = load_test_case(_read(args.test))
    device = open_device(args.device, cfg, args.app_id or tc.app_id)
    outcome = replay_test(device, tc)
    if outcome.passed:
        print('passed: %d events' % len(tc.events))
        return EXIT_OK
    print('failed at event %d: %s' % (outcome.failed_event, outcome.failure_reason))
    return EXIT_TASK_FAILED


COMMANDS = {
    'analyze': cmd_analyze,
    'migrate': cmd_migrate,
    'bench': cmd_bench,
    'verify': cmd_verify,
    'replay': cmd_replay
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    configure_logging(args.verbose)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](args, cfg)
    except (UsageError, ValueError) as e:
        parser.print_usage(sys.stderr)
        sys.stderr.write('%s: error: %s\n' % (parser.prog, e))
        return EXIT_USAGE
    except (MigrationError, OSError) as e:
        log.error("%s failed: %s", args.command, e)
        return EXIT_TASK_FAILED


if __name__ == '__main__':
    sys.exit(main())
