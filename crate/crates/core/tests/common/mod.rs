//! Shared scenario builders for the integration suites.
//!
//! Scenarios register their mock completions by replaying the same library
//! calls the pipeline makes (chunking, prompt rendering, test reports), so
//! fixture digests always line up with the prompts the engine will issue.

#![allow(dead_code)]

use std::collections::BTreeMap;

use pymend_core::assignment::{Assignment, ProgramVersion, TestCase};
use pymend_core::chunk;
use pymend_core::gateway::{FixtureEntry, MockBackend};
use pymend_core::oracle::{Interpreter, TestOutcome, TestReport, TestStatus, TestVector};
use pymend_core::prompt::{self, ExamplePair};

pub fn test_case(input: &str, expected: &str) -> TestCase {
    TestCase {
        input: input.to_string(),
        expected_output: expected.to_string(),
    }
}

fn version(source: &str, ordinal: u32) -> ProgramVersion {
    ProgramVersion {
        source: source.to_string(),
        ordinal,
    }
}

// --- reverse-sum task (prompt-layout scenarios) ---

pub const REVERSE_SUM_DESCRIPTION: &str = "Write a program to read a number (int) from the user. Print the number in reverse. Also print the sum of the number and its reverse in a separate line. See the examples.\nNOTE: Do not print any prompt in the input().\n";

pub const REVERSE_SUM_BUGGY: &str = "x=input()\ny=int(x)\nz = number\ny = 10 * y + z\nnumber = number / 10\nnumber = int(number)\nprint(\"Reverse: {}\".format(x[::-1]))\nprint(\"Sum: {}\".format(Sum))\n";

pub const REVERSE_SUM_REFERENCE: &str = "x = input().strip()\nn = int(x)\nr = int(str(n)[::-1])\nprint(\"Reverse: {}\".format(r))\nprint(\"Sum: {}\".format(n + r))\n";

pub fn reverse_sum_assignment() -> Assignment {
    Assignment {
        id: "reverse_sum".to_string(),
        description: REVERSE_SUM_DESCRIPTION.to_string(),
        tests: vec![
            test_case("43\n", "Reverse: 34\nSum: 77"),
            test_case("500\n", "Reverse: 5\nSum: 505"),
        ],
        reference_solution: Some(REVERSE_SUM_REFERENCE.to_string()),
        histories: BTreeMap::new(),
    }
}

/// What actually happens when the reverse-sum buggy program runs: every
/// test dies on the undefined name before printing anything.
pub fn reverse_sum_canned_report() -> TestReport {
    TestReport {
        vector: TestVector(vec![true, true]),
        per_test: vec![
            TestOutcome {
                status: TestStatus::RuntimeException,
                actual_output: String::new(),
            },
            TestOutcome {
                status: TestStatus::RuntimeException,
                actual_output: String::new(),
            },
        ],
    }
}

// --- pair-product task (few-shot scenarios) ---

pub const PRODUCT_DESCRIPTION: &str =
    "Read two integers m and n from one line separated by a space and print their product.\n";

/// Computes m+n by repeated increment; passes the `2 2` test and fails `2 3`.
pub const PRODUCT_BUGGY: &str =
    "m, n = map(int, input().split())\nsum = m\ni = 0\nwhile i < n:\n  sum += 1\n  i += 1\nprint (sum)\n";

/// Minimal product fix of [`PRODUCT_BUGGY`].
pub const PRODUCT_FIX: &str =
    "m, n = map(int, input().split())\nsum = 0\ni = 0\nwhile i < n:\n  sum += m\n  i += 1\nprint (sum)\n";

pub const PRODUCT_PEER_BUGGY: &str = "m, n = map(int, input().split())\nprint (m+n)\n";
pub const PRODUCT_PEER_CORRECT: &str = "m, n = map(int, input().split())\nprint (m*n)\n";

pub fn product_assignment() -> Assignment {
    let mut histories = BTreeMap::new();
    histories.insert(
        "s01".to_string(),
        vec![version(PRODUCT_BUGGY, 0), version(PRODUCT_FIX, 1)],
    );
    histories.insert(
        "s02".to_string(),
        vec![
            version(PRODUCT_PEER_BUGGY, 0),
            version(PRODUCT_PEER_CORRECT, 1),
        ],
    );
    Assignment {
        id: "product".to_string(),
        description: PRODUCT_DESCRIPTION.to_string(),
        tests: vec![test_case("2 2\n", "4"), test_case("2 3\n", "6")],
        reference_solution: Some(PRODUCT_PEER_CORRECT.to_string()),
        histories,
    }
}

pub fn product_shot() -> ExamplePair {
    ExamplePair {
        incorrect: PRODUCT_PEER_BUGGY.to_string(),
        correct: PRODUCT_PEER_CORRECT.to_string(),
    }
}

// --- prime-pair task (end-to-end scenario with a syntax and a semantic bug) ---

pub const PRIME_PAIR_DESCRIPTION: &str = "Read two comma-separated integers a and b from one line. Reverse the digits of a to get x and of b to get y. If both x and y are prime, print x+y. If exactly one of them is prime, print a+b. Otherwise print a*b.\n";

/// Reads the two values from separate lines (semantic mistake) and compares
/// with a single `=` in the elif clause (syntax mistake).
pub const PRIME_PAIR_BUGGY: &str = "a=int(input())\nb=int(input())\nn=str(a)\nm=str(b)\nn1=n[::-1]\nm1=m[::-1]\nx=int(n1)\ny=int(m1)\nif x>1:\n  for i in range(2, x):\n    if (x%i)==0:\n      p=0\n      break\n    else:\n      p=1\nelse:\n  p=0\nif y>1:\n  for j in range(2, y):\n    if (y%j)==0:\n      q=0\n      break\n    else:\n      q=1\nelse:\n  q=0\nif p==1 and q==1:\n  g=x+y\n  print(g)\nelif p=1 or q=1:\n  h=a+b\n  print(h)\nelse:\n  print(a*b)\n";

/// [`PRIME_PAIR_BUGGY`] with only the elif comparison repaired; the input
/// handling is still wrong, so tests still fail.
pub const PRIME_PAIR_SYNTAX_FIXED: &str = "a=int(input())\nb=int(input())\nn=str(a)\nm=str(b)\nn1=n[::-1]\nm1=m[::-1]\nx=int(n1)\ny=int(m1)\nif x>1:\n  for i in range(2, x):\n    if (x%i)==0:\n      p=0\n      break\n    else:\n      p=1\nelse:\n  p=0\nif y>1:\n  for j in range(2, y):\n    if (y%j)==0:\n      q=0\n      break\n    else:\n      q=1\nelse:\n  q=0\nif p==1 and q==1:\n  g=x+y\n  print(g)\nelif p==1 or q==1:\n  h=a+b\n  print(h)\nelse:\n  print(a*b)\n";

/// The minimal full repair: comma-split input and the elif fix, everything
/// else preserved.
pub const PRIME_PAIR_REPAIRED: &str = "a,b = map(int, input().split(','))\nn=str(a)\nm=str(b)\nn1=n[::-1]\nm1=m[::-1]\nx=int(n1)\ny=int(m1)\nif x>1:\n  for i in range(2, x):\n    if (x%i)==0:\n      p=0\n      break\n    else:\n      p=1\nelse:\n  p=0\nif y>1:\n  for j in range(2, y):\n    if (y%j)==0:\n      q=0\n      break\n    else:\n      q=1\nelse:\n  q=0\nif p==1 and q==1:\n  g=x+y\n  print(g)\nelif p==1 or q==1:\n  h=a+b\n  print(h)\nelse:\n  print(a*b)\n";

pub const PRIME_PAIR_REFERENCE: &str = "a, b = map(int, input().split(','))\ndef prime(z):\n    if z <= 1:\n        return 0\n    for i in range(2, z):\n        if z % i == 0:\n            return 0\n    return 1\nx = int(str(a)[::-1])\ny = int(str(b)[::-1])\np = prime(x)\nq = prime(y)\nif p == 1 and q == 1:\n    print(x + y)\nelif p == 1 or q == 1:\n    print(a + b)\nelse:\n    print(a * b)\n";

pub fn prime_pair_assignment() -> Assignment {
    Assignment {
        id: "prime_pair".to_string(),
        description: PRIME_PAIR_DESCRIPTION.to_string(),
        tests: vec![
            test_case("13,5\n", "36"),
            test_case("13,4\n", "17"),
            test_case("4,6\n", "24"),
        ],
        reference_solution: Some(PRIME_PAIR_REFERENCE.to_string()),
        histories: BTreeMap::new(),
    }
}

/// Registers completions that repair [`PRIME_PAIR_BUGGY`]: the syntax
/// prompts yield the elif fix and every semantic prompt yields the full
/// repair.
pub fn prime_pair_backend(interpreter: &Interpreter) -> MockBackend {
    let assignment = prime_pair_assignment();
    let mut mock = MockBackend::new();

    let diag = interpreter
        .check_syntax(PRIME_PAIR_BUGGY)
        .expect("oracle runs")
        .expect("buggy program has a syntax error");
    let chunk = chunk::chunk(PRIME_PAIR_BUGGY, &diag);
    // The elif sits at top level, so the chunk is the whole program and the
    // fix is the full syntax-repaired source.
    let fix = FixtureEntry::scored(PRIME_PAIR_SYNTAX_FIXED.trim_end_matches('\n'), -0.1);
    for prompt in prompt::syntax_prompts(&chunk, &diag) {
        mock.insert(&prompt.text, vec![fix.clone()]);
    }

    let report = interpreter
        .run_tests(PRIME_PAIR_SYNTAX_FIXED, &assignment.tests)
        .expect("oracle runs");
    assert!(!report.all_pass(), "input bug must still fail tests");
    let semantic_fix = FixtureEntry::scored(PRIME_PAIR_REPAIRED.trim_end_matches('\n'), -0.2);
    for prompt in prompt::semantic_prompts(PRIME_PAIR_SYNTAX_FIXED, &assignment, &[], Some(&report))
    {
        mock.insert(&prompt.text, vec![semantic_fix.clone()]);
    }
    mock
}

// --- two spatially independent syntax errors (iterative-querying scenario) ---

pub const TWO_ERROR_BUGGY: &str = "n = int(input())\ns = 0\nfor i in range(n):\n  if i % 2 == 0\n    s += i\nt = 0\nfor j in range(n):\n  if j % 3 == 0\n    t += j\nprint(s + t)\n";

pub const TWO_ERROR_FIRST_FIX: &str = "  if i % 2 == 0:\n    s += i";
pub const TWO_ERROR_SECOND_FIX: &str = "  if j % 3 == 0:\n    t += j";

pub fn two_error_assignment() -> Assignment {
    Assignment {
        id: "even_triple_sum".to_string(),
        description:
            "Read n. Print the sum of even numbers below n plus the sum of multiples of 3 below n.\n"
                .to_string(),
        tests: vec![test_case("10\n", "38"), test_case("5\n", "9")],
        reference_solution: None,
        histories: BTreeMap::new(),
    }
}

/// Registers completions that fix exactly one error per query, mirroring a
/// model that only sees the chunk it was shown. The program becomes valid
/// only on the second iteration.
pub fn two_error_backend(interpreter: &Interpreter) -> MockBackend {
    let mut mock = MockBackend::new();

    let diag1 = interpreter
        .check_syntax(TWO_ERROR_BUGGY)
        .expect("oracle runs")
        .expect("first error");
    let chunk1 = chunk::chunk(TWO_ERROR_BUGGY, &diag1);
    for prompt in prompt::syntax_prompts(&chunk1, &diag1) {
        mock.insert(&prompt.text, vec![FixtureEntry::new(TWO_ERROR_FIRST_FIX)]);
    }

    let merged1 = chunk::merge_chunk(TWO_ERROR_BUGGY, &chunk1, TWO_ERROR_FIRST_FIX);
    let diag2 = interpreter
        .check_syntax(&merged1)
        .expect("oracle runs")
        .expect("second error remains");
    let chunk2 = chunk::chunk(&merged1, &diag2);
    for prompt in prompt::syntax_prompts(&chunk2, &diag2) {
        mock.insert(&prompt.text, vec![FixtureEntry::new(TWO_ERROR_SECOND_FIX)]);
    }
    mock
}
