def evolve(parents, parent_objectives, problem_meta, seed):
    return parents
