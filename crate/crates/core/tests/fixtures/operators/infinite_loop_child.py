import subprocess


def next_generation(parents, parent_objectives, problem_meta, seed):
    # stub-behavior: hang child=1
    subprocess.Popen(["sleep", "100000"])
    while True:
        pass
