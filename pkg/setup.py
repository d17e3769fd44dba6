#!/usr/bin/env python3
"""
Installation and Testing Script for the Multi-way Corpus Builder
Verifies dependencies and runs a small end-to-end pipeline as a smoke test
"""

import importlib
import json
import os
import subprocess
import sys
import tempfile


def check_python_version():
    """Check Python version"""
    print("🔍 Checking Python version...")
    if sys.version_info < (3, 8):
        print("❌ Python 3.8 or higher is required")
        print(f"   Current version: {sys.version}")
        return False
    print(f"✅ Python {sys.version_info.major}.{sys.version_info.minor}.{sys.version_info.micro}")
    return True


def install_requirements():
    """Install required packages"""
    print("\n📦 Installing dependencies...")
    try:
        subprocess.check_call([sys.executable, "-m", "pip", "install", "-r", "requirements.txt"])
        print("✅ All dependencies installed")
        return True
    except subprocess.CalledProcessError:
        print("❌ Failed to install dependencies")
        return False


def check_imports():
    """Verify all required packages can be imported"""
    print("\n🔍 Verifying package imports...")

    packages = [
        'streamlit',
        'pandas',
        'numpy',
        'scipy',
        'plotly',
        'rapidfuzz',
        'requests',
        'tqdm',
        'pytest',
    ]

    all_ok = True
    for package in packages:
        try:
            importlib.import_module(package)
            print(f"  ✅ {package}")
        except ImportError:
            print(f"  ❌ {package} - Not found")
            all_ok = False

    return all_ok


def check_project_structure():
    """Verify project structure"""
    print("\n🔍 Checking project structure...")

    required_files = [
        'app.py',
        'cli.py',
        'config.py',
        'requirements.txt',
        'database/db.py',
        'database/schema.sql',
        'modules/corpus.py',
        'modules/distance.py',
        'modules/edit_script.py',
        'modules/simjoin.py',
        'modules/noising.py',
        'modules/transport.py',
        'modules/generation.py',
        'modules/mixture.py',
        'modules/stats.py',
        'modules/pipeline.py',
    ]

    all_ok = True
    for file in required_files:
        if os.path.exists(file):
            print(f"  ✅ {file}")
        else:
            print(f"  ❌ {file} - Missing")
            all_ok = False

    return all_ok


def test_ledger():
    """Test the checkpoint ledger"""
    print("\n🔍 Testing checkpoint ledger...")

    try:
        from database.db import initialize_database, load_checkpoint, save_checkpoint

        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "checkpoints.db")
            initialize_database(path)
            save_checkpoint(path, "de-fr", "extract", 3, "done")
            if load_checkpoint(path, "de-fr", "extract")["status"] == "done":
                print("  ✅ Ledger read/write")
                return True
            print("  ❌ Ledger did not keep the checkpoint")
            return False

    except Exception as e:
        print(f"  ❌ Ledger test failed: {str(e)}")
        return False


def test_smoke_run():
    """Run the whole pipeline on a tiny two-language corpus"""
    print("\n🔍 Running a smoke pipeline...")

    pivot = ["the cat sleeps on the mat", "a dog runs in the park", "we eat bread every day"]
    other_pivot = ["the cat sleeps on a mat", "birds sing in the morning", "we eat bread every day"]
    lexicons = {
        "de": {"the": "die", "a": "eine", "cat": "Katze", "sleeps": "schläft", "on": "auf", "mat": "Matte",
               "dog": "Hund", "runs": "läuft", "in": "im", "park": "Park", "we": "wir", "eat": "essen",
               "bread": "Brot", "every": "jeden", "day": "Tag", "birds": "Vögel", "sing": "singen",
               "morning": "Morgen"},
        "fr": {"the": "le", "a": "un", "cat": "chat", "sleeps": "dort", "on": "sur", "mat": "tapis",
               "dog": "chien", "runs": "court", "in": "dans", "park": "parc", "we": "nous", "eat": "mangeons",
               "bread": "pain", "every": "chaque", "day": "jour", "birds": "oiseaux", "sing": "chantent",
               "morning": "matin"},
    }

    try:
        from modules.pipeline import run_pipeline
        from modules.settings import build_pipeline_config

        with tempfile.TemporaryDirectory() as tmp:
            entries, lexicon_paths = [], {}
            for lang, sentences in (("de", pivot), ("fr", other_pivot)):
                lexicon = lexicons[lang]
                for suffix, lines in (("en", sentences),
                                      (lang, [" ".join(lexicon[w] for w in s.split()) for s in sentences])):
                    with open(os.path.join(tmp, f"en-{lang}.{suffix}"), "w", encoding="utf-8") as f:
                        f.write("\n".join(lines) + "\n")
                with open(os.path.join(tmp, f"{lang}.lex"), "w", encoding="utf-8") as f:
                    f.write("".join(f"{w}\t{t}\n" for w, t in lexicon.items()))
                entries.append({"pivot_path": f"en-{lang}.en", "other_path": f"en-{lang}.{lang}",
                                "pivot_lang": "en", "other_lang": lang})
                lexicon_paths[lang] = os.path.join(tmp, f"{lang}.lex")
            manifest = os.path.join(tmp, "manifest.json")
            with open(manifest, "w", encoding="utf-8") as f:
                json.dump(entries, f)

            cfg = build_pipeline_config(overrides={
                "manifest": manifest, "lexicons": lexicon_paths, "output_dir": os.path.join(tmp, "out"),
            })
            report = run_pipeline(cfg)
            accepted = report["pairs"]["de-fr"]["generation"]["accepted"]
            if report["status"] == "ok" and accepted == 2:
                print(f"  ✅ Pipeline built {accepted} multi-way examples")
                return True
            print(f"  ❌ Unexpected smoke result: status={report['status']} accepted={accepted}")
            return False

    except Exception as e:
        print(f"  ❌ Smoke run failed: {str(e)}")
        return False


def print_summary():
    """Print final summary"""
    print("\n" + "="*60)
    print("🎉 SETUP COMPLETE!")
    print("="*60)
    print("\n📋 Next Steps:")
    print("  1. Describe your corpora in a manifest and run the pipeline:")
    print("     python cli.py run --manifest corpora.json --lexicon de=de.lex --lexicon fr=fr.lex")
    print("\n  2. Browse the run report:")
    print("     ./run.sh  (or: streamlit run app.py)")
    print("\n  3. Run the tests:")
    print("     pytest -m 'not slow'")
    print("\n📖 Documentation:")
    print("  - README.md - Full documentation")
    print("  - QUICKSTART.md - Quick start guide")
    print("  - DESIGN.md - Design notes")
    print("\n" + "="*60)


def main():
    """Main setup process"""
    print("="*60)
    print("🌐 MULTI-WAY CORPUS BUILDER")
    print("   Installation & Setup Script")
    print("="*60)

    checks = [
        ("Python Version", check_python_version),
        ("Dependencies", install_requirements),
        ("Package Imports", check_imports),
        ("Project Structure", check_project_structure),
        ("Checkpoint Ledger", test_ledger),
        ("Smoke Run", test_smoke_run),
    ]

    results = []
    for name, check_func in checks:
        try:
            result = check_func()
            results.append((name, result))
        except Exception as e:
            print(f"\n❌ {name} check failed with error: {str(e)}")
            results.append((name, False))

    print("\n" + "="*60)
    print("SETUP RESULTS")
    print("="*60)

    for name, result in results:
        status = "✅ PASS" if result else "❌ FAIL"
        print(f"{name:.<40} {status}")

    all_passed = all(result for _, result in results)

    if all_passed:
        print("\n✅ All checks passed!")
        print_summary()
        return 0
    else:
        print("\n⚠️  Some checks failed. Please review the errors above.")
        return 1


if __name__ == "__main__":
    sys.exit(main())
