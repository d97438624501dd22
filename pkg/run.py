"""
python run.py verify-combinatorics --max-depth 3
python run.py solve --config template/examples/solve.json --out out/solve
python run.py asymptotics --config template/examples/asymptotics.json --eta 0.1 --eps 1e-2 1e-3 1e-4
"""
from qpdnls.cli import main

if __name__ == "__main__":
    main()
