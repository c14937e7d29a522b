from hsap.main import main

raise SystemExit(main())
