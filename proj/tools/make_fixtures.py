#!/usr/bin/env python3
"""Regenerates the synthetic CSV fixtures under tests/data.

Output is a pure function of the seeds below, so rerunning the script leaves
the committed files unchanged.
"""

import csv
import pathlib
import random

ROOT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data"

GENRES = ["Action", "Adventure", "Comedy", "Drama", "Horror", "Musical",
          "Romantic Comedy", "Thriller/Suspense", "Western"]
CREATIVE = ["Contemporary Fiction", "Dramatization", "Factual", "Fantasy",
            "Historical Fiction", "Kids Fiction", "Science Fiction", "Super Hero"]
RATINGS = ["G", "PG", "PG-13", "R"]


def movies(path: pathlib.Path) -> None:
    rng = random.Random(709)
    header = ["Genre", "Creative Type", "Content Rating", "Release Year",
              "Running Time", "Production Budget", "Worldwide Gross",
              "IMDB Rating", "Rotten Tomatoes Rating"]
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for i in range(709):
            genre = rng.choices(GENRES, weights=[18, 10, 20, 22, 6, 2, 7, 12, 3])[0]
            creative = rng.choice(CREATIVE)
            rating = rng.choices(RATINGS, weights=[5, 20, 40, 35])[0]
            year = rng.randint(1995, 2012)
            running = rng.randint(80, 180)
            budget = round(min(300.0, rng.lognormvariate(3.4, 0.8)), 1) * 1_000_000
            gross = round(budget * rng.lognormvariate(0.7, 0.9))
            imdb = round(rng.uniform(2.0, 9.2), 1)
            tomatoes = rng.randint(1, 100)
            row = [genre, creative, rating, year, running, int(budget), gross, imdb, tomatoes]
            if i % 97 == 13:
                row[7] = "NA"
            if i % 151 == 40:
                row[1] = ""
            w.writerow(row)


def loans(path: pathlib.Path) -> None:
    rng = random.Random(42)
    header = ["Home Ownership", "Loan Amount", "Interest Rate", "Grade",
              "Annual Income", "Issue Year"]
    # 50% mortgage, 40% rent, 10% own.
    ownership = ["Mortgage"] * 100 + ["Rent"] * 80 + ["Own"] * 20
    rng.shuffle(ownership)
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for home in ownership:
            amount = rng.randrange(1000, 40001, 250)
            grade = rng.choice("ABCDEFG")
            rate = round(5.0 + "ABCDEFG".index(grade) * 3.1 + rng.uniform(0, 3), 2)
            income = rng.randrange(20000, 200001, 500)
            year = rng.randint(2007, 2018)
            w.writerow([home, amount, rate, grade, income, year])


def main() -> None:
    ROOT.mkdir(parents=True, exist_ok=True)
    movies(ROOT / "movies.csv")
    loans(ROOT / "loans.csv")


if __name__ == "__main__":
    main()
