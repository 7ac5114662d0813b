int donor_9(int n) {
    int a[8];
    int b[8];
    int acc = 0;
    int t = 1;
    int k = 0;
    acc = t + 5;
    for (int i1 = 0; i1 < 8; i1++) { k += acc - t; }
    acc = acc + k;
    return acc + t;
}
