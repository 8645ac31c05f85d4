use crate::problems::Category;

pub fn problem_name(category: Category) -> &'static str {
    match category {
        Category::Cmop => "continuous multi-objective optimization problems",
        Category::Mokp => "multi-objective knapsack problems",
        Category::Motsp => "multi-objective traveling salesman problems",
    }
}

pub fn problem_description(category: Category) -> &'static str {
    match category {
        Category::Cmop => concat!(
            "These are box-constrained benchmark problems from the ZDT family with two objectives ",
            "and the DTLZ family with three objectives, all to be minimized. ",
            "Each solution is a vector of real numbers, one per decision variable, and every variable has ",
            "its own lower and upper bound. ",
            "The Pareto fronts may be convex, concave, disconnected or degenerate, and several problems ",
            "are multimodal with many local fronts. ",
            "One problem in the set uses a binary string instead of real numbers; its solutions are lists of 0/1 values.",
        ),
        Category::Mokp => concat!(
            "Each problem has n items with a positive weight and one positive profit per objective, ",
            "and a knapsack of capacity C. ",
            "A solution is a binary vector x where x[j] = 1 means item j is packed. ",
            "Objective i is the total profit of the packed items under profit vector i, and every objective ",
            "is to be maximized. ",
            "A solution is feasible only when the total weight of the packed items does not exceed C. ",
            "There are two objectives that conflict because different items are valuable under different objectives.",
        ),
        Category::Motsp => concat!(
            "Each problem has n cities and one symmetric distance matrix per objective. ",
            "A solution is a permutation of the city indices 0 to n-1 that visits every city exactly once. ",
            "Objective i is the sum of the distances under matrix i between consecutive cities of the ",
            "permutation, and every objective is to be minimized. ",
            "Unless the problem metadata says the tour is closed, no edge returns from the last city to the first. ",
            "There are two objectives, so good tours trade off one distance matrix against the other.",
        ),
    }
}

const FORMAT_HEAD: &str = "\
def next_generation(parents, parent_objectives, problem_meta, seed):
    \"\"\"Produce one offspring per parent.

    parents: list of N solutions forming the current population.
    parent_objectives: list of N lists of k floats; parent_objectives[i] holds the
        objective values of parents[i], already converted so that smaller is better
        for every objective.
    problem_meta: dict with keys
        'category': one of 'cmop', 'mokp', 'motsp';
        'encoding': one of 'real', 'bitstring', 'permutation';
        'n_var': length of every solution;
        'k': number of objectives;
        'bounds': dict with 'lower' and 'upper' lists of n_var floats (real encoding only, otherwise None);
        'objective_bounds': dict with 'ideal' and 'nadir' lists of k floats (smaller is better);";

const FORMAT_TAIL: &str = "
    seed: integer; seed random and numpy.random with it so the result is reproducible.

    Returns: list of exactly N offspring solutions with the same encoding as the parents.
    \"\"\"

The caller evaluates the offspring, merges them with the parents and keeps the best N by
nondominated sorting and crowding distance, so the function only needs to create offspring.
Only the modules random, math and numpy may be imported.";

/// The contract text describing the operator function.
pub fn format_spec(category: Category) -> String {
    let (solution, extra) = match category {
        Category::Cmop => (
            "
    Solutions are lists of n_var floats inside the bounds; values outside the bounds are clipped.
    For the binary problem, solutions are lists of 0/1 integers and 'bounds' is None.",
            "",
        ),
        Category::Mokp => (
            "
    Solutions are lists of n_var integers, each 0 or 1.
    An offspring whose packed weight exceeds the capacity is rejected, so repair every offspring.",
            "
        'weights': list of n_var item weights;
        'capacity': the knapsack capacity C;",
        ),
        Category::Motsp => (
            "
    Solutions are lists containing every integer 0 .. n_var-1 exactly once.
    Any offspring that is not a valid permutation is rejected.",
            "
        'closed_tour': True when the tour returns to its first city;",
        ),
    };
    format!("{FORMAT_HEAD}{extra}{solution}{FORMAT_TAIL}")
}
