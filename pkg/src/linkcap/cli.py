"""
Click-based CLI interface.
"""

import functools
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import click
import pandas as pd
from scipy import stats

from .allocation import CapacityPlan, allocate, check_centrality_alignment, mean_capacity_plan, plan_report
from .config import RunConfig, load_run_config, settings
from .errors import ConfigError, InvalidInputError, InvalidParameterError, LinkCapError
from .graph import (
    Topology,
    complete_graph,
    edge_betweenness,
    edge_label,
    generate_barabasi_albert,
    graph_stats,
    rank_edges,
    read_topology,
)
from .metrics import (
    best_record,
    congestion_free_histogram,
    g_curve,
    global_measure,
    max_centrality_std_curve,
    sweep_summary,
    topology_sweep,
)
from .pmf import TrafficConfig, edge_load_pmfs
from .routing import RoutingTable, build_routing_table
from .simulator import SimConfig, derive_seed, run_simulation
from .writer import ArtifactWriter

# 로깅 설정
logging.basicConfig(
    level=getattr(logging, settings.log_level.upper()),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    handlers=[
        logging.StreamHandler(),
        logging.FileHandler(settings.log_file) if settings.log_file else logging.NullHandler(),
    ],
)

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


# =============================================================================
# 공통 헬퍼
# =============================================================================


def _fail(code: int, message: str) -> None:
    logger.error(message)
    click.echo(f"❌ {message}", err=True)
    sys.exit(code)


def handle_errors(func: Callable[..., None]) -> Callable[..., None]:
    """라이브러리 예외를 종료 코드로 변환합니다 (설정/입력 2, 수치/잘림 3)."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> None:
        try:
            func(*args, **kwargs)
        except (ConfigError, InvalidParameterError, InvalidInputError) as e:
            _fail(EXIT_CONFIG, str(e))
        except (LinkCapError, FloatingPointError) as e:
            _fail(EXIT_NUMERIC, str(e))

    return wrapper


def run_options(func: Callable[..., None]) -> Callable[..., None]:
    """모든 명령이 공유하는 설정 플래그."""
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON 설정 파일"),
        click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), help="루트 시드"),
        click.option("--out", "out_dir", type=click.Path(file_okay=False), help="출력 디렉토리"),
        click.option("--lambda", "lam", type=float, help="순서쌍 평균 패킷 수 lambda"),
        click.option("--q", type=float, help="순서쌍 활성화 확률 q"),
        click.option("--c", "local_c", type=float, help="국소 성능 기준 c"),
        click.option("--C", "global_C", type=float, help="전역 기준 C"),
        click.option("--frames", type=int, help="시뮬레이션 프레임 수 (모든 frame count 대체)"),
        click.option("--epsilon", type=float, help="잘림 허용 비율 epsilon"),
        click.option("--workers", type=int, help="병렬 워커 수"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def build_config(params: Dict[str, Any], preset: Optional[str] = None) -> RunConfig:
    """설정 파일, 프리셋, CLI 플래그를 합쳐 RunConfig 를 만듭니다."""
    overrides = {
        "seed": params.get("seed"),
        "out_dir": params.get("out_dir"),
        "traffic.lambda": params.get("lam"),
        "traffic.q": params.get("q"),
        "c": params.get("local_c"),
        "C": params.get("global_C"),
        "n_frames": params.get("frames"),
        "epsilon": params.get("epsilon"),
        "workers": params.get("workers"),
    }
    config_path = params.get("config_path")
    cfg = load_run_config(Path(config_path) if config_path else None, overrides, preset=preset)
    if config_path:
        logger.info(f"설정 파일 로드: {config_path}")
    return cfg


def load_topology(cfg: RunConfig) -> Topology:
    """설정의 그래프 소스로 토폴로지를 만듭니다."""
    spec = cfg.graph
    if spec.kind == "file":
        return read_topology(spec.path)
    if spec.kind == "complete":
        return complete_graph(spec.n)
    seed = cfg.graph_seed()
    if seed is None:
        raise ConfigError(
            "a generated Barabasi-Albert graph needs a seed", ["graph.seed: set it, or set seed / pass --seed"]
        )
    return generate_barabasi_albert(spec.n, spec.m, seed)


def traffic_for(cfg: RunConfig, n: int, q: Optional[float] = None) -> TrafficConfig:
    if cfg.traffic.matrix_file:
        return TrafficConfig.from_file(cfg.traffic.matrix_file, n)
    return TrafficConfig.homogeneous(n, cfg.traffic.lam, cfg.traffic.q if q is None else q)


def q_runs(cfg: RunConfig, values: List[float]) -> List[Optional[float]]:
    """행렬 파일이 있으면 q 목록 대신 파일의 q 로 한 번만 실행합니다."""
    if cfg.traffic.matrix_file:
        logger.info("트래픽 행렬 파일 사용: q 목록은 무시됩니다")
        return [None]
    return list(values)


def _prepare(cfg: RunConfig) -> Tuple[Topology, RoutingTable, ArtifactWriter]:
    g = load_topology(cfg)
    table = build_routing_table(g, workers=cfg.resolved_workers())
    writer = ArtifactWriter(cfg.resolved_out_dir())
    logger.info(f"토폴로지: n={g.n}, |E|={g.edge_count}, 출력: {writer.out_dir}")
    return g, table, writer


# =============================================================================
# 명령어
# =============================================================================


@click.group(invoke_without_command=True)
@click.option("--debug", is_flag=True, help="디버그 모드 활성화")
@click.pass_context
@click.version_option()
def main(ctx: click.Context, debug: bool) -> None:
    """linkcap: 최단경로 라우팅 네트워크의 간선 용량 계획 도구"""
    if debug:
        logging.getLogger().setLevel(logging.DEBUG)
        logger.debug("디버그 모드 활성화")

    if ctx.invoked_subcommand is None:
        click.echo("linkcap - 간선 부하 분포 기반 용량 계획 도구")
        click.echo("")
        click.echo("주요 명령어:")
        click.echo("  pmf        - 중심성 상위 간선의 부하 pmf")
        click.echo("  allocate   - 국소 기준 c 에 대한 용량 계획")
        click.echo("  simulate   - 프레임 시뮬레이션과 전역 지표 g")
        click.echo("  sweep      - 완전 그래프 간선 제거 스윕과 E_G(g)")
        click.echo("  stats      - 그래프 통계와 간선 중심성")
        click.echo("")
        click.echo("사용법: linkcap <명령어> [옵션]")


@main.command()
@run_options
@click.option("--top-k", type=click.IntRange(min=1), help="pmf 를 기록할 중심성 상위 간선 수")
@handle_errors
def pmf(top_k: Optional[int], **params: Any) -> None:
    """중심성 상위 k 개 간선의 부하 pmf 와 정규화 보고서를 씁니다."""
    cfg = build_config(params)
    if top_k is not None:
        cfg = cfg.model_copy(update={"top_k": top_k})
    g, table, writer = _prepare(cfg)

    ranked = rank_edges(edge_betweenness(g))
    k = cfg.top_k
    if k > len(ranked):
        logger.warning(f"⚠️  top-k={k} 가 간선 수 {len(ranked)} 보다 큽니다. {len(ranked)} 로 줄입니다")
        k = len(ranked)
    top = ranked[:k]

    for q in q_runs(cfg, cfg.q_values):
        traffic = traffic_for(cfg, g.n, q)
        tag = writer.tag(q=q) if q is not None else "matrix"
        pmfs = edge_load_pmfs(table, traffic, cfg.truncation_policy(), workers=cfg.resolved_workers())
        for rank, edge in enumerate(top, start=1):
            stem = f"pmf_{tag}_rank{rank}_edge{edge_label(edge)}"
            writer.write_pmf(pmfs[edge], stem)
            writer.write_json(f"{stem}.json", pmfs[edge].to_json())
        writer.write_normalization_report(pmfs, f"normalization_{tag}")
        worst = max(p.truncation_deficit for p in pmfs.values()) if pmfs else 0.0
        logger.info(f"✅ {tag}: {len(pmfs)}개 간선 pmf 조립, 최대 잘림 결손 {worst:.3e}")

    click.echo(f"✅ pmf: {len(writer.written)}개 파일 → {writer.out_dir}")


@main.command("allocate")
@run_options
@handle_errors
def allocate_cmd(**params: Any) -> None:
    """국소 기준 c 에 대한 용량 계획과 간선별 초과 확률 보고서를 씁니다."""
    cfg = build_config(params)
    g, table, writer = _prepare(cfg)
    centrality = edge_betweenness(g)
    traffic = traffic_for(cfg, g.n)
    pmfs = edge_load_pmfs(table, traffic, cfg.truncation_policy(), workers=cfg.resolved_workers())

    provenance = {
        "traffic": traffic.description,
        "epsilon": cfg.epsilon,
        "convolution": cfg.convolution,
        "topology_id": g.fingerprint(),
    }
    plan = allocate(pmfs, cfg.c, provenance=provenance)
    check_centrality_alignment(plan, centrality)
    rows = plan_report(plan, pmfs, centrality)

    writer.write_plan(plan, rows, "plan")
    writer.write_csv("plan_report.csv", rows)
    writer.write_json("mean_plan.json", mean_capacity_plan(pmfs).to_json())

    for rank, edge in enumerate(rank_edges(centrality)[:2], start=1):
        frame = pmfs[edge].to_frame()
        frame["capacity"] = frame["k"] == plan.capacity[edge]
        writer.write_csv(f"capacity_curve_rank{rank}_edge{edge_label(edge)}.csv", frame)

    click.echo(f"✅ allocate: 총 용량 {sum(plan.capacity.values())}, {len(writer.written)}개 파일 → {writer.out_dir}")


@main.command()
@run_options
@click.option("--plan", "plan_path", type=click.Path(exists=True, dir_okay=False), help="기존 용량 계획 JSON")
@click.option("--dump-loads", is_flag=True, help="프레임별 부하 CSV 저장")
@handle_errors
def simulate(plan_path: Optional[str], dump_loads: bool, **params: Any) -> None:
    """
    프레임 시뮬레이션을 돌려 요약, 히스토그램, g-vs-C 곡선을 씁니다.

    q 와 프레임 수 조합마다 하나의 파일 묶음이 생깁니다.
    """
    cfg = build_config(params)
    seed = cfg.require_seed("simulate")
    g, table, writer = _prepare(cfg)
    fixed_plan = CapacityPlan.load(plan_path) if plan_path else None
    dump = cfg.dump_loads or dump_loads

    measures = []
    for qi, q in enumerate(q_runs(cfg, cfg.simulate_q_values)):
        traffic = traffic_for(cfg, g.n, q)
        plan = fixed_plan
        if plan is None:
            pmfs = edge_load_pmfs(table, traffic, cfg.truncation_policy(), workers=cfg.resolved_workers())
            plan = allocate(pmfs, cfg.c, provenance={"traffic": traffic.description, "epsilon": cfg.epsilon})
            writer.write_json(f"plan_{writer.tag(q=q) if q is not None else 'matrix'}.json", plan.to_json())

        for fi, n_frames in enumerate(cfg.simulation_frames()):
            sim = SimConfig(
                n_frames=n_frames,
                seed=derive_seed(seed, qi, fi),
                workers=cfg.resolved_workers(),
                show_progress=settings.show_progress,
            )
            trace = run_simulation(g, table, traffic, plan, sim)
            tag = writer.tag(q=q, f=n_frames) if q is not None else writer.tag(f=n_frames)
            writer.write_trace(trace, f"sim_{tag}", dump_loads=dump)
            writer.write_csv(f"histogram_{tag}.csv", congestion_free_histogram(trace, cfg.bin_width))
            writer.write_csv(f"g_curve_{tag}.csv", g_curve(trace))
            measure = global_measure(
                trace, cfg.C, lam=cfg.traffic.lam, q=q, c=cfg.c, topology_id=g.fingerprint()
            )
            measures.append(measure)
            logger.info(f"✅ {tag}: g(C={cfg.C}) = {measure.g:.4f}")

    writer.write_csv("global_measures.csv", measures)
    click.echo(f"✅ simulate: {len(measures)}개 실행, {len(writer.written)}개 파일 → {writer.out_dir}")


@main.command()
@run_options
@click.option("--preset", type=click.Choice(["full", "desk"]), help="스윕 규모 프리셋")
@click.option("--max-steps", type=click.IntRange(min=0), help="최대 제거 단계 수")
@handle_errors
def sweep(preset: Optional[str], max_steps: Optional[int], **params: Any) -> None:
    """완전 그래프에서 간선을 하나씩 제거하며 E_G(g) 와 그래프 통계를 기록합니다."""
    cfg = build_config(params, preset=preset)
    if max_steps is not None:
        cfg = cfg.model_copy(update={"sweep": cfg.sweep.model_copy(update={"max_steps": max_steps})})
    seed = cfg.require_seed("sweep")
    writer = ArtifactWriter(cfg.resolved_out_dir())
    policy = cfg.truncation_policy()

    logger.info(
        f"🚀 스윕: n={cfg.sweep.n}, 시퀀스 {cfg.sweep.n_sequences}개, 프레임 {cfg.sweep_frames()}, "
        f"q 격자 {cfg.q_grid_size}, lambda 꼬리 {cfg.lambda_tail_tol}"
    )
    records = []
    for sequence in range(cfg.sweep.n_sequences):
        seq_records = topology_sweep(
            cfg.sweep.n,
            cfg.c,
            cfg.C,
            p_lambda=stats.poisson(cfg.p_lambda_mean),
            n_frames=cfg.sweep_frames(),
            seed=seed,
            sequence=sequence,
            policy=policy,
            tol=cfg.lambda_tail_tol,
            q_points=cfg.q_grid_size,
            workers=cfg.resolved_workers(),
            max_steps=cfg.sweep.max_steps,
            show_progress=settings.show_progress,
        )
        writer.write_records(f"sweep_seq{sequence}.csv", seq_records)
        records.extend(seq_records)

    winner = best_record(records)
    summary = sweep_summary(records)
    summary["edges"] = winner.edges
    writer.write_json("winner.json", summary)

    topology = Topology.from_edges(cfg.sweep.n, [tuple(e) for e in winner.edges])
    if topology.edge_count:
        table = build_routing_table(topology, workers=cfg.resolved_workers())
        points = max_centrality_std_curve(table, cfg.traffic.lam, cfg.std_q_grid, policy)
        writer.write_csv("std_vs_q.csv", points)

    click.echo(
        f"✅ sweep: {len(records)}개 스냅샷, 최대 E_G(g) = {winner.expected_g:.4f} "
        f"(시퀀스 {winner.sequence}, 단계 {winner.step}) → {writer.out_dir}"
    )


@main.command("stats")
@run_options
@click.option("--routing", "dump_routing", is_flag=True, help="라우팅 테이블 JSON 저장")
@handle_errors
def stats_cmd(dump_routing: bool, **params: Any) -> None:
    """그래프 통계 JSON 과 간선 중심성 CSV 를 씁니다."""
    cfg = build_config(params)
    g = load_topology(cfg)
    writer = ArtifactWriter(cfg.resolved_out_dir())

    summary = graph_stats(g)
    writer.write_json("graph_stats.json", {**summary.model_dump(), "betweenness_convention": "ordered_pairs"})

    centrality = edge_betweenness(g)
    ranked = rank_edges(centrality)
    frame = pd.DataFrame(
        {
            "edge": [edge_label(e) for e in ranked],
            "betweenness": [centrality[e] for e in ranked],
            "rank": list(range(1, len(ranked) + 1)),
        }
    )
    writer.write_csv("edge_betweenness.csv", frame)

    if dump_routing:
        writer.write_json("routing.json", build_routing_table(g, workers=cfg.resolved_workers()).to_json())

    click.echo(
        f"✅ stats: n={summary.node_count}, |E|={summary.edge_count}, <k>={summary.mean_degree:.3f}, "
        f"<B>={summary.mean_edge_centrality:.3f}"
    )


if __name__ == "__main__":
    main()
