"""Fly the wall world with and without the 3D angular search."""
import numpy as np

from dualnav.bench import flight_scenario, oracle_shortest_path, wall_world
from dualnav.runtime import run_episode


def main():
    world, start, goal = wall_world()
    oracle = oracle_shortest_path(world, start, goal)
    print(f"oracle shortest path: {oracle[0]:.3f} m")
    for use_dags in (True, False):
        sc = flight_scenario(world, start, goal, seed=0, use_dags=use_dags)
        res = run_episode(sc, mode="virtual_time")
        label = "with 3D search" if use_dags else "2D only"
        print(f"{label}: {res.status}, "
              f"{res.metrics['trajectory_length']:.3f} m in "
              f"{res.metrics['duration']:.1f} s, "
              f"{res.metrics['backup_activations']} backups")
        peak = max(row[3] for row in res.trajectory)
        print(f"  peak altitude {peak:.2f} m")


if __name__ == "__main__":
    main()
