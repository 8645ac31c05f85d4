def next_generation(parents, parent_objectives, problem_meta, seed):
    # stub-behavior: zero_division after=3
    spread = max(o[0] for o in parent_objectives) - min(o[0] for o in parent_objectives)
    scale = 1.0 / spread
    return [list(p) for p in parents]
