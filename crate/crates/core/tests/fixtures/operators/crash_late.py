import ctypes


def next_generation(parents, parent_objectives, problem_meta, seed):
    # stub-behavior: crash after=3
    ctypes.string_at(0)
    return parents
